//! Seeded synthetic datasets for tests, validation and benchmarks.

use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::math::{exp, sqrt};
use crate::model::Dataset;

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Rows with `nnz` Gaussian entries at uniformly random features; `nnz >= d`
/// gives dense rows. When `unit` is set each row is scaled to unit norm.
pub fn gaussian_rows<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    d: usize,
    nnz: usize,
    unit: bool,
) -> Vec<Vec<(usize, f64)>> {
    let nnz = nnz.clamp(1, d);
    (0..n)
        .map(|_| {
            let mut row: Vec<(usize, f64)> = if nnz == d {
                (0..d).map(|j| (j, gaussian(rng))).collect()
            } else {
                sample(rng, d, nnz).into_iter().map(|j| (j, gaussian(rng))).collect()
            };
            if unit {
                let norm = sqrt(row.iter().map(|(_, v)| v * v).sum());
                if norm > 0.0 {
                    row.iter_mut().for_each(|(_, v)| *v /= norm);
                }
            }
            row.sort_unstable_by_key(|(j, _)| *j);
            row
        })
        .collect()
}

fn inner(row: &[(usize, f64)], x: &[f64]) -> f64 {
    row.iter().map(|&(j, v)| v * x[j]).sum()
}

/// Least-squares data `y = A x_true + noise` with dense Gaussian rows.
/// Returns the dataset and `x_true`.
pub fn least_squares(n: usize, d: usize, noise: f64, seed: u64) -> Result<(Dataset, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = gaussian_rows(&mut rng, n, d, d, false);
    let x_true: Vec<f64> = (0..d).map(|_| gaussian(&mut rng)).collect();
    let targets = rows.iter().map(|r| inner(r, &x_true) + noise * gaussian(&mut rng)).collect();
    Ok((Dataset::from_rows(d, rows, targets)?, x_true))
}

/// Logistic data for the loss `log(1 + exp(b a.x))`: labels are drawn from
/// the model it induces, `P[b = +1] = 1/(1 + exp(a.w))`, for a random `w`
/// scaled by `signal`. Rows have `nnz` nonzeros and unit norm when `unit`.
pub fn logistic(n: usize, d: usize, nnz: usize, unit: bool, signal: f64, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = gaussian_rows(&mut rng, n, d, nnz, unit);
    let w: Vec<f64> = (0..d).map(|_| signal * gaussian(&mut rng)).collect();
    let labels = rows
        .iter()
        .map(|r| {
            let p_plus = 1.0 / (1.0 + exp(inner(r, &w)));
            if rng.random::<f64>() < p_plus {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    Dataset::from_rows(d, rows, labels)
}

/// Least-squares data whose rows have unit norm except row 0, which has norm
/// `outlier_norm`. Targets follow a random linear model with noise.
pub fn skewed_least_squares(n: usize, d: usize, outlier_norm: f64, noise: f64, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = gaussian_rows(&mut rng, n, d, d, true);
    if let Some(first) = rows.first_mut() {
        first.iter_mut().for_each(|(_, v)| *v *= outlier_norm);
    }
    let x_true: Vec<f64> = (0..d).map(|_| gaussian(&mut rng)).collect();
    let targets = rows.iter().map(|r| inner(r, &x_true) + noise * gaussian(&mut rng)).collect();
    Dataset::from_rows(d, rows, targets)
}
