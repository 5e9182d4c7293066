//! Finite-sum linear models: `f_i(x) = phi_i(a_i . x)`, weighted by
//! `lambda_i`, plus a regularizer.
//!
//! Rows are sparse vectors stored in compressed-row form with 0-based feature
//! indices. An optional ridge term `(r/2)|x|^2` can be folded into every
//! `f_i`, which makes each term strongly convex for the smooth regime.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::power_iteration;
use crate::math::{exp, ln_1p};
use crate::prox::Regularizer;

/// Sparse data matrix with one row per example and a per-example target.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dataset {
    d: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
    targets: Vec<f64>,
}

/// A borrowed sparse row.
#[derive(Debug, Clone, Copy)]
pub struct Row<'a> {
    pub indices: &'a [usize],
    pub values: &'a [f64],
}

impl Row<'_> {
    #[inline]
    pub fn dot(&self, x: &[f64]) -> f64 {
        self.indices.iter().zip(self.values).map(|(&j, v)| v * x[j]).sum()
    }

    /// `y += a * row`
    #[inline]
    pub fn axpy(&self, a: f64, y: &mut [f64]) {
        for (&j, v) in self.indices.iter().zip(self.values) {
            y[j] += a * v;
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Normalization {
    #[default]
    None,
    /// Scale every nonzero row to unit Euclidean norm.
    UnitL2,
}

impl Dataset {
    /// Builds a dataset from sparse rows of `(feature, value)` pairs with
    /// 0-based features. Pairs are sorted; explicit zeros are dropped.
    pub fn from_rows(d: usize, rows: Vec<Vec<(usize, f64)>>, targets: Vec<f64>) -> Result<Self> {
        if rows.len() != targets.len() {
            return Err(Error::DimensionMismatch {
                what: "targets",
                expected: rows.len(),
                got: targets.len(),
            });
        }
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_unstable_by_key(|(j, _)| *j);
            for (k, &(j, v)) in row.iter().enumerate() {
                if j >= d {
                    return Err(Error::InvalidData {
                        reason: alloc::format!("row {i}: feature {j} outside dimension {d}"),
                    });
                }
                if k > 0 && row[k - 1].0 == j {
                    return Err(Error::InvalidData {
                        reason: alloc::format!("row {i}: duplicate feature {j}"),
                    });
                }
                if !v.is_finite() {
                    return Err(Error::InvalidData {
                        reason: alloc::format!("row {i}: non-finite value"),
                    });
                }
                if v != 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        if let Some(i) = targets.iter().position(|t| !t.is_finite()) {
            return Err(Error::InvalidData { reason: alloc::format!("row {i}: non-finite target") });
        }
        Ok(Self { d, indptr, indices, values, targets })
    }

    /// Builds a dataset from a dense row-major `n x d` matrix.
    pub fn from_dense(d: usize, matrix: &[f64], targets: Vec<f64>) -> Result<Self> {
        let n = targets.len();
        if matrix.len() != n * d {
            return Err(Error::DimensionMismatch { what: "dense matrix", expected: n * d, got: matrix.len() });
        }
        let rows = matrix
            .chunks(d.max(1))
            .take(n)
            .map(|r| r.iter().copied().enumerate().collect())
            .collect();
        Self::from_rows(d, rows, targets)
    }

    pub fn n(&self) -> usize {
        self.targets.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    #[inline]
    pub fn row(&self, i: usize) -> Row<'_> {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        Row { indices: &self.indices[a..b], values: &self.values[a..b] }
    }

    /// Same rows, with the feature dimension raised to `d`.
    pub fn with_dim(mut self, d: usize) -> Result<Self> {
        if d < self.d {
            return Err(Error::InvalidData {
                reason: "feature dimension may only be raised".to_string(),
            });
        }
        self.d = d;
        Ok(self)
    }

    /// Number of rows with a nonzero entry in each feature column.
    pub fn column_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.d];
        for &j in &self.indices {
            counts[j] += 1;
        }
        counts
    }

    pub fn normalize_rows(&self, mode: Normalization) -> Self {
        let mut out = self.clone();
        if mode == Normalization::UnitL2 {
            for i in 0..self.n() {
                let (a, b) = (self.indptr[i], self.indptr[i + 1]);
                let norm = crate::math::sqrt(self.row(i).norm_sq());
                if norm > 0.0 {
                    out.values[a..b].iter_mut().for_each(|v| *v /= norm);
                }
            }
        }
        out
    }

    /// Rows reordered so that row `k` of the result is row `perm[k]` here.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let rows = perm
            .iter()
            .map(|&i| {
                let r = self.row(i);
                r.indices.iter().copied().zip(r.values.iter().copied()).collect()
            })
            .collect();
        let targets = perm.iter().map(|&i| self.targets[i]).collect();
        Self::from_rows(self.d, rows, targets).expect("rows of a valid dataset")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum LossKind {
    /// `log(1 + exp(b t))` with label `b`.
    Logistic,
    /// `(t - y)^2 / 2` with target `y`.
    SquaredError,
}

impl LossKind {
    /// `phi'` is `1/gamma`-Lipschitz.
    pub fn gamma(self) -> f64 {
        match self {
            LossKind::Logistic => 4.0,
            LossKind::SquaredError => 1.0,
        }
    }

    /// Value and derivative at the inner product `t`.
    #[inline]
    pub fn value_grad(self, t: f64, label: f64) -> (f64, f64) {
        match self {
            LossKind::Logistic => {
                let z = label * t;
                let value = if z > 30.0 { z + ln_1p(exp(-z)) } else { ln_1p(exp(z)) };
                (value, label * sigmoid(z))
            }
            LossKind::SquaredError => {
                let r = t - label;
                (0.5 * r * r, r)
            }
        }
    }

    #[inline]
    pub fn derivative(self, t: f64, label: f64) -> f64 {
        match self {
            LossKind::Logistic => label * sigmoid(label * t),
            LossKind::SquaredError => t - label,
        }
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + exp(-z))
    } else {
        let e = exp(z);
        e / (1.0 + e)
    }
}

/// `(phi(t), phi'(t))` for the given loss.
pub fn loss_value_grad(loss: LossKind, t: f64, label: f64) -> (f64, f64) {
    loss.value_grad(t, label)
}

/// The weighted finite-sum objective
/// `P(x) = sum_i lambda_i [phi_i(a_i . x) + (r/2)|x|^2] + psi(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    data: Dataset,
    loss: LossKind,
    lambda: Vec<f64>,
    reg: Regularizer,
    smooth_ridge: f64,
    mu: Option<f64>,
    row_smoothness: Vec<f64>,
    smoothness: f64,
}

impl Problem {
    /// `lambda = None` means uniform weights `1/n`.
    pub fn new(data: Dataset, loss: LossKind, lambda: Option<Vec<f64>>, reg: Regularizer) -> Result<Self> {
        let n = data.n();
        if n == 0 {
            return Err(Error::InvalidData { reason: "dataset has no rows".to_string() });
        }
        let lambda = lambda.unwrap_or_else(|| vec![1.0 / n as f64; n]);
        if lambda.len() != n {
            return Err(Error::DimensionMismatch { what: "weights", expected: n, got: lambda.len() });
        }
        if let Some(&value) = lambda.iter().find(|l| !(**l > 0.0) || !l.is_finite()) {
            return Err(Error::NonPositiveInput { name: "lambda", value });
        }
        reg.validate(data.d())?;
        if loss == LossKind::Logistic {
            if let Some(i) = data.targets().iter().position(|&b| b != 1.0 && b != -1.0) {
                return Err(Error::InvalidData {
                    reason: alloc::format!("row {i}: logistic labels must be -1 or +1"),
                });
            }
        }
        let mut problem = Self {
            data,
            loss,
            lambda,
            reg,
            smooth_ridge: 0.0,
            mu: None,
            row_smoothness: Vec::new(),
            smoothness: 0.0,
        };
        problem.refresh_smoothness();
        Ok(problem)
    }

    /// Folds `(r/2)|x|^2` into every `f_i`.
    pub fn with_smooth_ridge(mut self, r: f64) -> Result<Self> {
        if !(r >= 0.0) || !r.is_finite() {
            return Err(Error::NonPositiveInput { name: "smooth_ridge", value: r });
        }
        self.smooth_ridge = r;
        self.refresh_smoothness();
        Ok(self)
    }

    /// Overrides the strong-convexity (or growth) constant.
    pub fn with_mu(mut self, mu: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::NonPositiveInput { name: "mu", value: mu });
        }
        self.mu = Some(mu);
        Ok(self)
    }

    fn refresh_smoothness(&mut self) {
        let gamma = self.loss.gamma();
        let r = self.smooth_ridge;
        self.row_smoothness =
            (0..self.n()).map(|i| self.data.row(i).norm_sq() / gamma + r).collect();
        let data = &self.data;
        let lambda = &self.lambda;
        let top = power_iteration(data.d(), |v, out| {
            for (i, &l) in lambda.iter().enumerate() {
                let row = data.row(i);
                row.axpy(l * row.dot(v), out);
            }
        });
        self.smoothness = top / gamma + r * self.lambda.iter().sum::<f64>();
    }

    /// Smoothness of each group average `(1/|C|) sum_{i in C} f_i`.
    pub fn group_smoothness(&self, groups: &[Vec<usize>]) -> Vec<f64> {
        let gamma = self.loss.gamma();
        groups
            .iter()
            .map(|group| {
                let scale = 1.0 / group.len() as f64;
                let top = power_iteration(self.d(), |v, out| {
                    for &i in group {
                        let row = self.data.row(i);
                        row.axpy(scale * row.dot(v), out);
                    }
                });
                top / gamma + self.smooth_ridge
            })
            .collect()
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn loss(&self) -> LossKind {
        self.loss
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn regularizer(&self) -> &Regularizer {
        &self.reg
    }

    pub fn smooth_ridge(&self) -> f64 {
        self.smooth_ridge
    }

    pub fn n(&self) -> usize {
        self.data.n()
    }

    pub fn d(&self) -> usize {
        self.data.d()
    }

    pub fn gamma(&self) -> f64 {
        self.loss.gamma()
    }

    /// Per-term smoothness `L_i = |a_i|^2/gamma + r`.
    pub fn row_smoothness(&self) -> &[f64] {
        &self.row_smoothness
    }

    /// Smoothness of `f = sum_i lambda_i f_i`.
    pub fn smoothness(&self) -> f64 {
        self.smoothness
    }

    /// The explicit constant if one was set, else the strong convexity that
    /// the folded ridge gives `f`, else the regularizer's modulus.
    pub fn mu(&self) -> Option<f64> {
        if self.mu.is_some() {
            return self.mu;
        }
        let ridge = self.smooth_ridge * self.lambda.iter().sum::<f64>();
        if ridge > 0.0 {
            return Some(ridge);
        }
        let psi = self.reg.mu_psi();
        (psi > 0.0).then_some(psi)
    }

    /// `a_i . x`
    #[inline]
    pub fn margin(&self, i: usize, x: &[f64]) -> f64 {
        self.data.row(i).dot(x)
    }

    /// The dual scalar `phi_i'(a_i . x)`; the gradient of the data part of
    /// `f_i` is this scalar times row `i`.
    #[inline]
    pub fn dual(&self, i: usize, x: &[f64]) -> f64 {
        self.loss.derivative(self.margin(i, x), self.data.targets[i])
    }

    /// Dense `grad f_i(x)` into `out` (overwritten), ridge included.
    pub fn partial_grad_into(&self, i: usize, x: &[f64], out: &mut [f64]) -> f64 {
        let a = self.dual(i, x);
        let r = self.smooth_ridge;
        out.iter_mut().zip(x).for_each(|(o, xi)| *o = r * xi);
        self.data.row(i).axpy(a, out);
        a
    }

    /// `(phi_i'(a_i . x), grad f_i(x))`.
    pub fn partial_grad(&self, i: usize, x: &[f64]) -> (f64, Vec<f64>) {
        let mut g = vec![0.0; self.d()];
        let a = self.partial_grad_into(i, x, &mut g);
        (a, g)
    }

    /// `grad f(x) = sum_i lambda_i grad f_i(x)`.
    pub fn full_grad(&self, x: &[f64]) -> Vec<f64> {
        let r = self.smooth_ridge * self.lambda.iter().sum::<f64>();
        let mut g: Vec<f64> = x.iter().map(|xi| r * xi).collect();
        for (i, &l) in self.lambda.iter().enumerate() {
            self.data.row(i).axpy(l * self.dual(i, x), &mut g);
        }
        g
    }

    /// `f(x)`, the smooth part of the objective.
    pub fn smooth_value(&self, x: &[f64]) -> f64 {
        let targets = self.data.targets();
        let data: f64 = self
            .lambda
            .iter()
            .enumerate()
            .map(|(i, l)| l * self.loss.value_grad(self.margin(i, x), targets[i]).0)
            .sum();
        data + 0.5 * self.smooth_ridge * self.lambda.iter().sum::<f64>() * crate::math::norm_sq(x)
    }

    /// `P(x) = f(x) + psi(x)`.
    pub fn objective(&self, x: &[f64]) -> f64 {
        self.smooth_value(x) + self.reg.value(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{dot, norm_sq};
    use proptest::prelude::*;

    fn dense(d: usize, m: &[f64], t: &[f64]) -> Dataset {
        Dataset::from_dense(d, m, t.to_vec()).unwrap()
    }

    #[test]
    fn loss_examples() {
        let (v, g) = loss_value_grad(LossKind::Logistic, 0.0, 1.0);
        assert!((v - core::f64::consts::LN_2).abs() < 1e-15 && (g - 0.5).abs() < 1e-15);
        let (v, g) = loss_value_grad(LossKind::Logistic, 1000.0, 1.0);
        assert!(v.is_finite() && (v - 1000.0).abs() < 1e-9 && (g - 1.0).abs() < 1e-15);
        let (v, g) = loss_value_grad(LossKind::Logistic, -1000.0, 1.0);
        assert!((0.0..1e-300).contains(&v) && (0.0..1e-300).contains(&g));
        assert_eq!(loss_value_grad(LossKind::SquaredError, 3.0, 1.0), (2.0, 2.0));
    }

    #[test]
    fn partial_grad_examples() {
        let data = Dataset::from_rows(2, vec![vec![], vec![(0, 1.0)]], vec![1.0, 1.0]).unwrap();
        let p = Problem::new(data, LossKind::Logistic, None, Regularizer::Zero).unwrap();
        let (a, g) = p.partial_grad(0, &[0.3, 0.2]);
        assert_eq!(a, 0.5);
        assert_eq!(g, vec![0.0, 0.0]);
        assert_eq!(p.dual(1, &[0.0, 0.0]), 0.5);
    }

    #[test]
    fn smoothness_examples() {
        let p = Problem::new(dense(2, &[2.0, 0.0], &[1.0]), LossKind::Logistic, None, Regularizer::Zero).unwrap();
        assert!((p.row_smoothness()[0] - 1.0).abs() < 1e-15);

        // orthonormal rows with uniform weights: the operator is I/n on the row span
        let n = 3;
        let p = Problem::new(
            dense(4, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0], &[0.0; 3]),
            LossKind::SquaredError,
            None,
            Regularizer::Zero,
        )
        .unwrap();
        assert!((p.smoothness() - 1.0 / n as f64).abs() < 1e-9);

        let p = p.with_smooth_ridge(0.25).unwrap();
        assert!(p.row_smoothness().iter().all(|l| (l - 1.25).abs() < 1e-15));
        assert!((p.smoothness() - (1.0 / 3.0 + 0.25)).abs() < 1e-9);
        assert!((p.mu().unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn objective_examples() {
        let data = dense(2, &[1.0, 2.0, -1.0, 0.5], &[1.0, -1.0]);
        let p = Problem::new(data.clone(), LossKind::Logistic, None, Regularizer::Zero).unwrap();
        assert!((p.objective(&[0.0, 0.0]) - core::f64::consts::LN_2).abs() < 1e-15);
        let x = [0.3, -0.7];
        let w = 0.4;
        let q = Problem::new(data, LossKind::Logistic, None, Regularizer::L1 { l1: w }).unwrap();
        assert!((q.objective(&x) - p.objective(&x) - w * 1.0).abs() < 1e-15);
    }

    #[test]
    fn normalization_examples() {
        let data = Dataset::from_rows(2, vec![vec![(0, 3.0), (1, 4.0)], vec![]], vec![0.0, 0.0]).unwrap();
        let u = data.normalize_rows(Normalization::UnitL2);
        assert_eq!(u.row(0).values, &[0.6, 0.8]);
        assert_eq!(u.row(1).nnz(), 0);
    }

    #[test]
    fn dataset_validation() {
        assert!(Dataset::from_rows(2, vec![vec![(2, 1.0)]], vec![1.0]).is_err());
        assert!(Dataset::from_rows(2, vec![vec![(1, 1.0), (1, 2.0)]], vec![1.0]).is_err());
        assert!(Dataset::from_rows(2, vec![vec![(1, f64::NAN)]], vec![1.0]).is_err());
        assert!(Dataset::from_rows(2, vec![vec![]], vec![]).is_err());
        let d = Dataset::from_rows(1, vec![vec![(0, 1.0)]], vec![0.5]).unwrap();
        assert!(Problem::new(d, LossKind::Logistic, None, Regularizer::Zero).is_err());
    }

    #[test]
    fn full_grad_vanishes_at_least_squares_optimum() {
        // one feature: minimize sum_i (a_i x - y_i)^2 / 2n, optimum x = a.y / a.a
        let a = [1.0, 2.0, -1.0];
        let y = [0.5, 1.0, 2.0];
        let p = Problem::new(dense(1, &a, &y), LossKind::SquaredError, None, Regularizer::Zero).unwrap();
        let xs = dot(&a, &y) / norm_sq(&a);
        assert!(p.full_grad(&[xs])[0].abs() < 1e-15);
    }

    fn instance() -> impl Strategy<Value = (Problem, Vec<f64>, Vec<f64>)> {
        (1usize..6, 1usize..5, any::<bool>(), 0.0..0.5f64).prop_flat_map(|(n, d, logistic, ridge)| {
            (
                prop::collection::vec(-2.0..2.0f64, n * d),
                prop::collection::vec(-1.5..1.5f64, n),
                prop::collection::vec(0.1..1.0f64, n),
                prop::collection::vec(-1.5..1.5f64, d),
                prop::collection::vec(-1.5..1.5f64, d),
            )
                .prop_map(move |(m, t, lam, x, y)| {
                    let loss = if logistic { LossKind::Logistic } else { LossKind::SquaredError };
                    let t = if logistic { t.iter().map(|v| if *v < 0.0 { -1.0 } else { 1.0 }).collect() } else { t };
                    let data = Dataset::from_dense(d, &m, t).unwrap();
                    let p = Problem::new(data, loss, Some(lam), Regularizer::Zero)
                        .unwrap()
                        .with_smooth_ridge(ridge)
                        .unwrap();
                    (p, x, y)
                })
        })
    }

    proptest! {
        #[test]
        fn gradients_match_finite_differences((p, x, _) in instance()) {
            let h = 1e-5;
            let g = p.full_grad(&x);
            for j in 0..x.len() {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                let fd = (p.smooth_value(&xp) - p.smooth_value(&xm)) / (2.0 * h);
                prop_assert!((fd - g[j]).abs() <= 1e-5 * (1.0 + g[j].abs()));
            }
            for i in 0..p.n() {
                let (_, gi) = p.partial_grad(i, &x);
                let fi = |z: &[f64]| {
                    p.loss().value_grad(p.margin(i, z), p.data().targets()[i]).0
                        + 0.5 * p.smooth_ridge() * norm_sq(z)
                };
                for j in 0..x.len() {
                    let mut xp = x.clone();
                    let mut xm = x.clone();
                    xp[j] += h;
                    xm[j] -= h;
                    let fd = (fi(&xp) - fi(&xm)) / (2.0 * h);
                    prop_assert!((fd - gi[j]).abs() <= 1e-5 * (1.0 + gi[j].abs()));
                }
            }
        }

        #[test]
        fn partial_gradients_are_cocoercive((p, x, y) in instance()) {
            for i in 0..p.n() {
                let (_, gx) = p.partial_grad(i, &x);
                let (_, gy) = p.partial_grad(i, &y);
                let dg: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| a - b).collect();
                let dx: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
                let l = p.row_smoothness()[i];
                prop_assert!(dot(&dg, &dx) >= norm_sq(&dg) / l - 1e-10);
            }
        }

        #[test]
        fn loss_derivative_is_cocoercive(a in -40.0..40.0f64, b in -40.0..40.0f64, y in -1.5..1.5f64, positive in any::<bool>()) {
            for loss in [LossKind::Logistic, LossKind::SquaredError] {
                let label = match loss {
                    LossKind::Logistic if positive => 1.0,
                    LossKind::Logistic => -1.0,
                    LossKind::SquaredError => y,
                };
                let da = loss.derivative(a, label);
                let db = loss.derivative(b, label);
                prop_assert!((da - db) * (a - b) >= loss.gamma() * (da - db) * (da - db) - 1e-12);
            }
        }

        #[test]
        fn objective_invariant_under_joint_permutation((p, x, _) in instance(), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let n = p.n();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let lam: Vec<f64> = perm.iter().map(|&i| p.lambda()[i]).collect();
            let q = Problem::new(p.data().permuted(&perm), p.loss(), Some(lam), p.regularizer().clone())
                .unwrap()
                .with_smooth_ridge(p.smooth_ridge())
                .unwrap();
            prop_assert!((p.objective(&x) - q.objective(&x)).abs() <= 1e-12 * (1.0 + p.objective(&x).abs()));
        }

        #[test]
        fn smoothness_bounds((p, _, _) in instance()) {
            let weighted: f64 = p.lambda().iter().zip(p.row_smoothness()).map(|(l, li)| l * li).sum();
            prop_assert!(p.smoothness() <= weighted * (1.0 + 1e-9) + 1e-12);
        }
    }
}
