//! Regularizers `psi` and their proximal operators
//! `prox(x) = argmin_y (1/(2 alpha)) |x - y|^2 + psi(y)`.

use alloc::vec::Vec;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Regularizer {
    Zero,
    /// `l1 * |x|_1`
    L1 { l1: f64 },
    /// `(l2 / 2) * |x|^2`
    L2 { l2: f64 },
    /// `l1 * |x|_1 + (l2 / 2) * |x|^2`
    ElasticNet { l1: f64, l2: f64 },
    /// Indicator of the box `lo <= x <= hi`, componentwise.
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

#[inline]
fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

fn check_weight(name: &'static str, value: f64) -> Result<()> {
    if !(value >= 0.0) || !value.is_finite() {
        return Err(Error::NonPositiveInput { name, value });
    }
    Ok(())
}

impl Regularizer {
    /// Checks weights and, for boxes, bounds against dimension `d`.
    pub fn validate(&self, d: usize) -> Result<()> {
        match self {
            Regularizer::Zero => Ok(()),
            Regularizer::L1 { l1 } => check_weight("l1", *l1),
            Regularizer::L2 { l2 } => check_weight("l2", *l2),
            Regularizer::ElasticNet { l1, l2 } => {
                check_weight("l1", *l1)?;
                check_weight("l2", *l2)
            }
            Regularizer::Box { lo, hi } => {
                for (what, v) in [("box lower bounds", lo), ("box upper bounds", hi)] {
                    if v.len() != d {
                        return Err(Error::DimensionMismatch { what, expected: d, got: v.len() });
                    }
                }
                if lo.iter().zip(hi).any(|(l, h)| !(l <= h)) {
                    return Err(Error::InvalidData { reason: "box lower bound exceeds upper bound".into() });
                }
                Ok(())
            }
        }
    }

    /// Strong-convexity modulus of `psi`.
    pub fn mu_psi(&self) -> f64 {
        match self {
            Regularizer::L2 { l2 } | Regularizer::ElasticNet { l2, .. } => *l2,
            _ => 0.0,
        }
    }

    /// Applies `prox_{alpha psi}` in place.
    pub fn prox_in_place(&self, alpha: f64, x: &mut [f64]) {
        match self {
            Regularizer::Zero => {}
            Regularizer::L1 { l1 } => {
                let t = alpha * l1;
                x.iter_mut().for_each(|v| *v = soft_threshold(*v, t));
            }
            Regularizer::L2 { l2 } => {
                let s = 1.0 / (1.0 + alpha * l2);
                x.iter_mut().for_each(|v| *v *= s);
            }
            Regularizer::ElasticNet { l1, l2 } => {
                let t = alpha * l1;
                let s = 1.0 / (1.0 + alpha * l2);
                x.iter_mut().for_each(|v| *v = soft_threshold(*v, t) * s);
            }
            Regularizer::Box { lo, hi } => {
                for ((v, l), h) in x.iter_mut().zip(lo).zip(hi) {
                    *v = v.clamp(*l, *h);
                }
            }
        }
    }

    pub fn prox(&self, alpha: f64, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        self.prox_in_place(alpha, &mut out);
        out
    }

    /// `psi(x)`; `+inf` outside a box.
    pub fn value(&self, x: &[f64]) -> f64 {
        let l1_norm = || x.iter().map(|v| v.abs()).sum::<f64>();
        let sq = || x.iter().map(|v| v * v).sum::<f64>();
        match self {
            Regularizer::Zero => 0.0,
            Regularizer::L1 { l1 } => l1 * l1_norm(),
            Regularizer::L2 { l2 } => 0.5 * l2 * sq(),
            Regularizer::ElasticNet { l1, l2 } => l1 * l1_norm() + 0.5 * l2 * sq(),
            Regularizer::Box { lo, hi } => {
                let inside = x.iter().zip(lo).zip(hi).all(|((v, l), h)| *l <= *v && *v <= *h);
                if inside {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn prox_examples() {
        let r = Regularizer::L1 { l1: 1.0 };
        assert!(close(&r.prox(0.5, &[1.2, -0.3]), &[0.7, 0.0], 1e-15));
        let r = Regularizer::L2 { l2: 2.0 };
        assert_eq!(r.prox(0.5, &[2.0, -4.0]), vec![1.0, -2.0]);
        let r = Regularizer::ElasticNet { l1: 1.0, l2: 2.0 };
        assert!(close(&r.prox(0.5, &[1.2]), &[0.35], 1e-15));
        let r = Regularizer::Box { lo: vec![-1.0, 0.0], hi: vec![1.0, 0.5] };
        assert_eq!(r.prox(3.0, &[2.0, -1.0]), vec![1.0, 0.0]);
        assert_eq!(Regularizer::Zero.prox(1.0, &[3.0]), vec![3.0]);
    }

    #[test]
    fn value_examples() {
        assert_eq!(Regularizer::Zero.value(&[5.0]), 0.0);
        let b = Regularizer::Box { lo: vec![0.0], hi: vec![1.0] };
        assert_eq!(b.value(&[2.0]), f64::INFINITY);
        assert_eq!(b.value(&[0.5]), 0.0);
        let e = Regularizer::ElasticNet { l1: 1.0, l2: 2.0 };
        assert!((e.value(&[1.0, -1.0]) - 4.0).abs() < 1e-15);
    }

    #[test]
    fn elastic_net_prox_matches_grid_minimizer() {
        let r = Regularizer::ElasticNet { l1: 1.0, l2: 2.0 };
        let (alpha, x) = (0.5, 1.2);
        let obj = |y: f64| (x - y) * (x - y) / (2.0 * alpha) + r.value(&[y]);
        let mut best = (f64::INFINITY, 0.0);
        for k in 0..=200_000 {
            let y = -2.0 + 4.0 * k as f64 / 200_000.0;
            let v = obj(y);
            if v < best.0 {
                best = (v, y);
            }
        }
        assert!((best.1 - 0.35).abs() < 1e-4);
    }

    #[test]
    fn validation() {
        assert!(Regularizer::L1 { l1: -1.0 }.validate(2).is_err());
        assert!(Regularizer::Box { lo: vec![1.0], hi: vec![0.0] }.validate(1).is_err());
        assert!(Regularizer::Box { lo: vec![0.0], hi: vec![1.0] }.validate(2).is_err());
        assert!(Regularizer::ElasticNet { l1: 0.1, l2: 0.2 }.validate(3).is_ok());
    }

    fn regularizers() -> impl Strategy<Value = Regularizer> {
        prop_oneof![
            Just(Regularizer::Zero),
            (0.0..3.0f64).prop_map(|l1| Regularizer::L1 { l1 }),
            (0.0..3.0f64).prop_map(|l2| Regularizer::L2 { l2 }),
            (0.0..3.0f64, 0.0..3.0f64).prop_map(|(l1, l2)| Regularizer::ElasticNet { l1, l2 }),
            (-2.0..0.0f64, 0.0..2.0f64).prop_map(|(l, h)| Regularizer::Box { lo: vec![l; 3], hi: vec![h; 3] }),
        ]
    }

    proptest! {
        #[test]
        fn prox_is_contractive(
            r in regularizers(),
            alpha in 0.01..5.0f64,
            x in prop::collection::vec(-5.0..5.0f64, 3),
            y in prop::collection::vec(-5.0..5.0f64, 3),
        ) {
            let px = r.prox(alpha, &x);
            let py = r.prox(alpha, &y);
            let d_in = crate::math::dist_sq(&x, &y).sqrt();
            let d_out = crate::math::dist_sq(&px, &py).sqrt();
            prop_assert!(d_out <= d_in / (1.0 + alpha * r.mu_psi()) + 1e-12);
        }

        #[test]
        fn prox_minimizes_on_coordinate_slices(
            r in regularizers(),
            alpha in 0.05..3.0f64,
            x in prop::collection::vec(-3.0..3.0f64, 3),
        ) {
            let p = r.prox(alpha, &x);
            let obj = |y: &[f64]| crate::math::dist_sq(x.as_slice(), y) / (2.0 * alpha) + r.value(y);
            let base = obj(&p);
            prop_assert!(base.is_finite());
            // the objective is separable, so perturbing one coordinate on a
            // fine grid around the prox point never decreases it
            for j in 0..3 {
                for k in -200..=200 {
                    let mut q = p.clone();
                    q[j] += k as f64 * 0.01;
                    prop_assert!(obj(&q) >= base - 1e-6);
                }
            }
        }
    }
}
