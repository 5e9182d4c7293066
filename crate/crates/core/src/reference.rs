//! Deterministic proximal gradient descent, used as a baseline and to
//! compute reference optima.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{axpy, norm_inf};
use crate::model::Problem;
use crate::solver::DIVERGENCE_LIMIT;

/// Default iteration budget for reference solves.
pub const REFERENCE_MAX_ITERS: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceOptions {
    /// Step size; `None` means `1/(3L)`.
    pub alpha: Option<f64>,
    pub max_iters: u64,
    /// Stop once a step moves no coordinate by more than this.
    pub step_tol: f64,
    pub x0: Option<Vec<f64>>,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        Self { alpha: None, max_iters: REFERENCE_MAX_ITERS, step_tol: 0.0, x0: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iters: u64,
    /// Largest coordinate change of the last step.
    pub last_step: f64,
}

/// Iterates `x <- prox(x - alpha grad f(x))` until the step is at most
/// `step_tol` (an exact fixed point when zero) or the budget is spent.
pub fn prox_gradient(problem: &Problem, opts: &ReferenceOptions) -> Result<ReferenceSolution> {
    let d = problem.d();
    let alpha = match opts.alpha {
        Some(a) => a,
        None => {
            let l = problem.smoothness();
            if !(l > 0.0) {
                return Err(Error::NonPositiveInput { name: "L", value: l });
            }
            1.0 / (3.0 * l)
        }
    };
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::NonPositiveInput { name: "alpha", value: alpha });
    }
    let mut x = opts.x0.clone().unwrap_or_else(|| vec![0.0; d]);
    if x.len() != d {
        return Err(Error::DimensionMismatch { what: "initial point", expected: d, got: x.len() });
    }
    let mut next = vec![0.0; d];
    let mut iters = 0;
    let mut last_step = f64::INFINITY;
    while iters < opts.max_iters {
        let g = problem.full_grad(&x);
        next.copy_from_slice(&x);
        axpy(-alpha, &g, &mut next);
        problem.regularizer().prox_in_place(alpha, &mut next);
        iters += 1;
        last_step = x.iter().zip(&next).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        core::mem::swap(&mut x, &mut next);
        let norm = norm_inf(&x);
        if !(norm <= DIVERGENCE_LIMIT) {
            return Err(Error::NumericalDivergence { iteration: iters, norm });
        }
        if last_step <= opts.step_tol {
            break;
        }
    }
    let objective = problem.objective(&x);
    Ok(ReferenceSolution { x, objective, iters, last_step })
}
