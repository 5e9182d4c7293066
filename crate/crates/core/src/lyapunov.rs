//! Potential functions whose expectation contracts geometrically along the
//! iteration, and the solution-set oracles they need.
//!
//! All values are exact conditional expectations given the solver state.
//! The smooth and partition potentials depend on a random subset and are
//! averaged over the full support, so the sampling must be enumerable.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::orthonormal_basis;
use crate::math::{dist_sq, dot, norm_sq};
use crate::model::Problem;
use crate::sampling::SamplingStats;
use crate::solver::{Saga, SolverState};

/// Gives the projection `[x]*` of a point onto the solution set.
#[derive(Debug, Clone, PartialEq)]
pub enum SolutionOracle {
    /// The problem has a single minimizer.
    Unique(Vec<f64>),
    /// The solution set is `point + null(A)`, with `row_basis` an orthonormal
    /// basis of the span of the data rows.
    Affine { point: Vec<f64>, row_basis: Vec<Vec<f64>> },
    /// No oracle is known for this problem.
    Unavailable,
}

impl SolutionOracle {
    /// Oracle for problems whose optima are `x* + null(A)`, e.g. consistent
    /// least squares without regularization.
    pub fn affine(problem: &Problem, point: Vec<f64>) -> Self {
        let data = problem.data();
        let rows: Vec<Vec<f64>> = (0..data.n())
            .map(|i| {
                let mut r = vec![0.0; data.d()];
                data.row(i).axpy(1.0, &mut r);
                r
            })
            .collect();
        let row_basis = orthonormal_basis(&rows, 1e-10);
        SolutionOracle::Affine { point, row_basis }
    }

    /// Some minimizer.
    pub fn point(&self) -> Result<&[f64]> {
        match self {
            SolutionOracle::Unique(x) | SolutionOracle::Affine { point: x, .. } => Ok(x),
            SolutionOracle::Unavailable => Err(Error::OracleUnavailable { reason: "no minimizer known" }),
        }
    }

    /// The minimizer closest to `x`.
    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            SolutionOracle::Unique(xs) => Ok(xs.clone()),
            SolutionOracle::Affine { point, row_basis } => {
                let diff: Vec<f64> = x.iter().zip(point).map(|(a, b)| a - b).collect();
                let mut out = x.to_vec();
                for q in row_basis {
                    let c = dot(q, &diff);
                    out.iter_mut().zip(q).for_each(|(o, qi)| *o -= c * qi);
                }
                Ok(out)
            }
            SolutionOracle::Unavailable => Err(Error::OracleUnavailable { reason: "no projection known" }),
        }
    }
}

/// `grad f_i(x*)` for every `i`.
fn optimal_columns(problem: &Problem, xstar: &[f64]) -> Vec<Vec<f64>> {
    (0..problem.n()).map(|i| problem.partial_grad(i, xstar).1).collect()
}

/// Expectation over `S` of
/// `|x - x*|^2 + 2 alpha |S| sum_{i in S} sigma_i |theta_S^i lambda_i (J_i - grad f_i(x*))|^2`.
pub fn smooth_expected(saga: &Saga<'_>, state: &SolverState, sigma: &[f64], xstar: &[f64]) -> Result<f64> {
    let problem = saga.problem();
    let lambda = problem.lambda();
    let optimal = optimal_columns(problem, xstar);
    let diffs: Vec<f64> = (0..problem.n())
        .map(|i| dist_sq(&state.column(problem, i), &optimal[i]))
        .collect();
    let mut table = 0.0;
    let mut weights = Vec::new();
    for (subset, prob) in saga.sampling().support()? {
        saga.corrector().weights_into(saga.stats(), &subset, &mut weights)?;
        let size = subset.len() as f64;
        let inner: f64 = subset
            .iter()
            .zip(&weights)
            .map(|(&i, &theta)| sigma[i] * theta * theta * lambda[i] * lambda[i] * diffs[i])
            .sum();
        table += prob * size * inner;
    }
    Ok(dist_sq(&state.x, xstar) + 2.0 * saga.alpha() * table)
}

/// `|x - [x]*|^2 + alpha sum_i sigma_i v_i lambda_i^2 (a_i - phi_i'(a_i . x*))^2 / p_i`
/// where `a_i` are the stored dual scalars.
pub fn composite(
    problem: &Problem,
    state: &SolverState,
    stats: &SamplingStats,
    sigma: &[f64],
    v: &[f64],
    alpha: f64,
    oracle: &SolutionOracle,
) -> Result<f64> {
    let duals = state
        .store
        .duals()
        .ok_or(Error::Unsupported { reason: "composite potential needs scalar Jacobian storage" })?;
    let xstar = oracle.point()?;
    let projected = oracle.project(&state.x)?;
    let lambda = problem.lambda();
    let table: f64 = (0..problem.n())
        .map(|i| {
            let gap = duals[i] - problem.dual(i, xstar);
            sigma[i] * v[i] * lambda[i] * lambda[i] * gap * gap / stats.p[i]
        })
        .sum();
    Ok(dist_sq(&state.x, &projected) + alpha * table)
}

/// Expectation over groups `C` of
/// `|x - x*|^2 + 2 alpha sigma_C |sum_{j in C} lambda_j (J_j - grad f_j(x*)) / p_C|^2`,
/// with `sigma` indexed like `groups`.
pub fn partition_expected(
    saga: &Saga<'_>,
    state: &SolverState,
    groups: &[Vec<usize>],
    group_probs: &[f64],
    sigma: &[f64],
    xstar: &[f64],
) -> Result<f64> {
    let problem = saga.problem();
    let lambda = problem.lambda();
    let optimal = optimal_columns(problem, xstar);
    let mut table = 0.0;
    for ((group, &p), &s) in groups.iter().zip(group_probs).zip(sigma) {
        let mut acc = vec![0.0; problem.d()];
        for &j in group {
            let col = state.column(problem, j);
            for ((a, c), o) in acc.iter_mut().zip(&col).zip(&optimal[j]) {
                *a += lambda[j] * (c - o) / p;
            }
        }
        table += p * s * norm_sq(&acc);
    }
    Ok(dist_sq(&state.x, xstar) + 2.0 * saga.alpha() * table)
}
