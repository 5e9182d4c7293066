//! Variance-reduced stochastic gradient solver for regularized finite sums
//!
//! ```text
//!     min_x  sum_i lambda_i f_i(x) + psi(x)
//! ```
//!
//! where the stochastic step samples an arbitrary random subset of the `n`
//! terms per iteration. The crate carries:
//!
//! * [`sampling`]: proper samplings over subsets of `{0, .., n-1}`, exact
//!   marginal and conditional-size statistics, bias-correcting weights.
//! * [`planner`]: ESO constants, step sizes with their convergence-rate
//!   bounds, importance-sampling probabilities.
//! * [`model`]: sparse linear-model losses (logistic, squared error) and the
//!   objective.
//! * [`prox`]: proximal operators of the supported regularizers.
//! * [`solver`]: the iteration itself, with a compact Jacobian table.
//! * [`lyapunov`] and [`verify`]: potential functions and exhaustive
//!   one-step oracles used to check linear convergence on small problems.
//!
//! The crate is `no_std` (it needs `alloc`); file formats, configuration and
//! the command line live in the companion `saga-cli` crate.
#![cfg_attr(not(any(feature = "std", test)), no_std)]
// NaN-rejecting guards are written as `!(x > 0.0)` on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod error;
pub mod linalg;
pub mod lyapunov;
pub mod model;
pub mod planner;
pub mod prox;
pub mod reference;
pub mod sampling;
pub mod solver;
pub mod synth;
pub mod verify;

pub(crate) mod math;

pub use error::{Error, Result};
pub use model::{Dataset, LossKind, Problem};
pub use planner::{EsoParams, Regime, StepSizePlan};
pub use prox::Regularizer;
pub use sampling::{BiasCorrector, Sampling, SamplingStats};
pub use solver::{JacobianInit, Saga, SolverState, StoreMode, Trace, TraceRecord};
