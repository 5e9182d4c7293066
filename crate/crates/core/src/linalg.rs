//! Eigenvalue and orthogonalization routines for the small dense problems the
//! planner and the verification oracles need.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{dot, norm_sq, sqrt};

pub const POWER_MAX_ITERS: usize = 1000;
pub const POWER_REL_TOL: f64 = 1e-8;

/// Largest eigenvalue of a symmetric positive semidefinite operator given only
/// through its action `apply(v, out)`.
///
/// Starts from the all-ones vector. If that vector is annihilated by the
/// operator a deterministic non-symmetric start is tried before concluding the
/// operator is zero.
pub fn power_iteration<F>(dim: usize, mut apply: F) -> f64
where
    F: FnMut(&[f64], &mut [f64]),
{
    if dim == 0 {
        return 0.0;
    }
    let starts: [fn(usize) -> f64; 2] = [|_| 1.0, |k| 1.0 + sqrt(k as f64 + 1.0)];
    let mut best = 0.0f64;
    for start in starts {
        let lambda = power_from(dim, &mut apply, start);
        if lambda > 0.0 {
            return lambda;
        }
        best = best.max(lambda);
    }
    best
}

fn power_from<F>(dim: usize, apply: &mut F, start: fn(usize) -> f64) -> f64
where
    F: FnMut(&[f64], &mut [f64]),
{
    let mut v: Vec<f64> = (0..dim).map(start).collect();
    let nv = sqrt(norm_sq(&v));
    v.iter_mut().for_each(|x| *x /= nv);
    let mut w = vec![0.0; dim];
    let mut lambda = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        w.iter_mut().for_each(|x| *x = 0.0);
        apply(&v, &mut w);
        let rayleigh = dot(&v, &w);
        let nw = sqrt(norm_sq(&w));
        if nw == 0.0 || !nw.is_finite() {
            return 0.0;
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
        let converged = (rayleigh - lambda).abs() <= POWER_REL_TOL * rayleigh.abs();
        lambda = rayleigh;
        if converged {
            break;
        }
    }
    // one more application gives the Rayleigh quotient at the final vector
    w.iter_mut().for_each(|x| *x = 0.0);
    apply(&v, &mut w);
    lambda.max(dot(&v, &w))
}

/// Eigen-decomposition of a dense symmetric matrix (row-major, `n x n`) by
/// cyclic Jacobi rotations. Returns eigenvalues in ascending order and the
/// matching unit eigenvectors.
pub fn symmetric_eigen(matrix: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    assert_eq!(matrix.len(), n * n, "matrix must be n x n");
    let mut a = matrix.to_vec();
    let mut vecs = vec![0.0; n * n];
    for i in 0..n {
        vecs[i * n + i] = 1.0;
    }
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * n + j] * a[i * n + j])
            .sum();
        let scale: f64 = (0..n).map(|i| a[i * n + i] * a[i * n + i]).sum::<f64>() + off;
        if off <= 1e-30 * scale.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / sqrt(t * t + 1.0);
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = vecs[k * n + p];
                    let vkq = vecs[k * n + q];
                    vecs[k * n + p] = c * vkp - s * vkq;
                    vecs[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].total_cmp(&a[j * n + j]));
    let values = order.iter().map(|&i| a[i * n + i]).collect();
    let vectors = order
        .iter()
        .map(|&j| (0..n).map(|k| vecs[k * n + j]).collect())
        .collect();
    (values, vectors)
}

/// Minimum-norm solution of `matrix * x = rhs` for a symmetric positive
/// semidefinite `matrix`, through its eigen-decomposition. Eigenvalues below
/// `1e-12` times the largest are treated as zero.
pub fn solve_symmetric(matrix: &[f64], n: usize, rhs: &[f64]) -> Vec<f64> {
    let (values, vectors) = symmetric_eigen(matrix, n);
    let top = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut x = vec![0.0; n];
    for (value, v) in values.iter().zip(&vectors) {
        if value.abs() > 1e-12 * top {
            let c = dot(v, rhs) / value;
            x.iter_mut().zip(v).for_each(|(xi, vi)| *xi += c * vi);
        }
    }
    x
}

/// Orthonormal basis of the span of `vectors` (modified Gram-Schmidt with one
/// re-orthogonalization pass). Directions whose residual norm falls below
/// `rel_tol` times the original norm are dropped as dependent.
pub fn orthonormal_basis(vectors: &[Vec<f64>], rel_tol: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let original = sqrt(norm_sq(v));
        if original == 0.0 {
            continue;
        }
        let mut r = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &r);
                r.iter_mut().zip(q).for_each(|(ri, qi)| *ri -= c * qi);
            }
        }
        let nr = sqrt(norm_sq(&r));
        if nr > rel_tol * original {
            r.iter_mut().for_each(|x| *x /= nr);
            basis.push(r);
        }
    }
    basis
}

/// Gauss-Legendre nodes and weights mapped to `[0, 1]`. The rule with `m`
/// nodes integrates polynomials of degree `2m - 1` exactly.
pub fn gauss_legendre_unit(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    let mf = m as f64;
    for i in 0..m.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_m
        let mut x = libm::cos(core::f64::consts::PI * (i as f64 + 0.75) / (mf + 0.5));
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(m, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(m, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1, 1] -> [0, 1]
        nodes[i] = 0.5 * (1.0 - x);
        nodes[m - 1 - i] = 0.5 * (1.0 + x);
        weights[i] = 0.5 * w;
        weights[m - 1 - i] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
