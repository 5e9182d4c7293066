//! The SAGA iteration with arbitrary sampling.
//!
//! Each step draws a subset `S`, forms the unbiased estimate
//!
//! ```text
//!     g = u + sum_{i in S} lambda_i theta_S^i (grad f_i(x) - J_i),   u = sum_i lambda_i J_i
//! ```
//!
//! takes the proximal step `x <- prox(x - alpha g)` and overwrites the table
//! columns `J_i, i in S` with the fresh gradients. The estimate reads the
//! table before it is updated.
//!
//! For linear models without a folded ridge, every column is a multiple of
//! its data row, so the table is stored as one scalar per example.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::math::{axpy, dist_sq, norm_inf};
use crate::model::Problem;
use crate::sampling::{BiasCorrector, Sampling, SamplingStats};

/// `|x|_inf` beyond which a run is declared divergent.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum StoreMode {
    /// Scalars when the model allows it, dense columns otherwise.
    #[default]
    Auto,
    Dense,
    DualScalars,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum JacobianInit {
    /// `J = 0`.
    #[default]
    Zeros,
    /// `J_i = grad f_i(x0)`.
    AtX0,
}

/// Stored per-example gradients.
#[derive(Debug, Clone, PartialEq)]
pub enum JacobianStore {
    /// Column `i` occupies `cols[i*d..(i+1)*d]`.
    Dense { cols: Vec<f64>, d: usize },
    /// Column `i` is `duals[i] * a_i`.
    DualScalars { duals: Vec<f64> },
}

impl JacobianStore {
    /// Column `i` as a dense vector.
    pub fn column(&self, problem: &Problem, i: usize) -> Vec<f64> {
        match self {
            JacobianStore::Dense { cols, d } => cols[i * d..(i + 1) * d].to_vec(),
            JacobianStore::DualScalars { duals } => {
                let mut c = vec![0.0; problem.d()];
                problem.data().row(i).axpy(duals[i], &mut c);
                c
            }
        }
    }

    pub fn duals(&self) -> Option<&[f64]> {
        match self {
            JacobianStore::DualScalars { duals } => Some(duals),
            JacobianStore::Dense { .. } => None,
        }
    }
}

#[derive(Debug, Clone, Default)]
struct Workspace {
    subset: Vec<usize>,
    perm: Vec<usize>,
    weights: Vec<f64>,
    grad: Vec<f64>,
    /// fresh duals, or fresh dense gradients stacked per subset member
    fresh: Vec<f64>,
}

/// Iterate, table and counters of one run.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub x: Vec<f64>,
    pub store: JacobianStore,
    /// `u = sum_i lambda_i J_i`
    pub running_sum: Vec<f64>,
    /// iterations taken
    pub k: u64,
    /// total number of sampled indices
    pub touched: u64,
    pub rng: ChaCha8Rng,
    n: usize,
    since_refresh: usize,
    work: Workspace,
}

impl SolverState {
    /// Effective passes over the data: sampled indices divided by `n`.
    pub fn passes(&self) -> f64 {
        self.touched as f64 / self.n as f64
    }

    pub fn column(&self, problem: &Problem, i: usize) -> Vec<f64> {
        self.store.column(problem, i)
    }

    /// `sum_i lambda_i J_i` recomputed from the table.
    pub fn exact_running_sum(&self, problem: &Problem) -> Vec<f64> {
        let mut u = vec![0.0; problem.d()];
        accumulate_sum(&self.store, problem, &mut u);
        u
    }
}

fn accumulate_sum(store: &JacobianStore, problem: &Problem, u: &mut [f64]) {
    u.iter_mut().for_each(|v| *v = 0.0);
    let lambda = problem.lambda();
    match store {
        JacobianStore::Dense { cols, d } => {
            for (i, &l) in lambda.iter().enumerate() {
                axpy(l, &cols[i * d..(i + 1) * d], u);
            }
        }
        JacobianStore::DualScalars { duals } => {
            for (i, &l) in lambda.iter().enumerate() {
                problem.data().row(i).axpy(l * duals[i], u);
            }
        }
    }
}

/// Source of wall-clock time for traces; the core crate has none of its own.
pub trait Clock {
    fn elapsed_ms(&self) -> f64;
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TraceRecord {
    pub k: u64,
    pub passes: f64,
    pub objective: f64,
    pub dist_sq: Option<f64>,
    pub lyapunov: Option<f64>,
    pub wall_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    /// Passes at the first record meeting the target, if one was set and met.
    pub target_reached_at: Option<f64>,
}

impl Trace {
    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }
}

/// Early-stopping target, checked at every record.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Target {
    /// Relative gap `(P(x) - P*)/(P(x0) - P*) <= eps`.
    RelativeGap { p_star: f64, eps: f64 },
    /// `Psi(x) <= eps * Psi(x0)` for the supplied Lyapunov function.
    Lyapunov { eps: f64 },
}

/// Run configuration: budget, recording cadence and optional monitors.
pub struct RunOptions<'a> {
    pub max_passes: f64,
    pub max_iters: Option<u64>,
    /// Passes between records.
    pub record_every: f64,
    pub target: Option<Target>,
    /// Reference solution for `dist_sq`.
    pub reference: Option<&'a [f64]>,
    pub lyapunov: Option<&'a dyn Fn(&SolverState) -> f64>,
    pub clock: Option<&'a dyn Clock>,
}

impl Default for RunOptions<'_> {
    fn default() -> Self {
        Self {
            max_passes: 100.0,
            max_iters: None,
            record_every: 1.0,
            target: None,
            reference: None,
            lyapunov: None,
            clock: None,
        }
    }
}

/// A configured solver: problem, sampling, weights and step size.
#[derive(Debug, Clone)]
pub struct Saga<'a> {
    problem: &'a Problem,
    sampling: Sampling,
    stats: SamplingStats,
    corrector: BiasCorrector,
    alpha: f64,
    mode: StoreMode,
}

impl<'a> Saga<'a> {
    pub fn new(problem: &'a Problem, sampling: Sampling, corrector: BiasCorrector, alpha: f64) -> Result<Self> {
        if sampling.n() != problem.n() {
            return Err(Error::DimensionMismatch {
                what: "sampling index set",
                expected: problem.n(),
                got: sampling.n(),
            });
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::NonPositiveInput { name: "alpha", value: alpha });
        }
        let stats = sampling.stats();
        corrector.check_unbiased(&sampling, &stats, 1e-10)?;
        let mut saga = Self { problem, sampling, stats, corrector, alpha, mode: StoreMode::Auto };
        saga = saga.with_store(StoreMode::Auto)?;
        Ok(saga)
    }

    /// Partition sampling over `groups` with marginal-inverse weights
    /// `theta = 1/p_C`.
    pub fn partition(problem: &'a Problem, groups: Vec<Vec<usize>>, probs: Vec<f64>, alpha: f64) -> Result<Self> {
        let sampling = Sampling::partition(problem.n(), groups, probs)?;
        Self::new(problem, sampling, BiasCorrector::MarginalInverse, alpha)
    }

    pub fn with_store(mut self, mode: StoreMode) -> Result<Self> {
        let ridge = self.problem.smooth_ridge() > 0.0;
        self.mode = match mode {
            StoreMode::Auto if ridge => StoreMode::Dense,
            StoreMode::Auto => StoreMode::DualScalars,
            StoreMode::DualScalars if ridge => {
                return Err(Error::Unsupported {
                    reason: "scalar Jacobian storage cannot represent a folded ridge term",
                })
            }
            other => other,
        };
        Ok(self)
    }

    pub fn problem(&self) -> &Problem {
        self.problem
    }

    pub fn sampling(&self) -> &Sampling {
        &self.sampling
    }

    pub fn stats(&self) -> &SamplingStats {
        &self.stats
    }

    pub fn corrector(&self) -> &BiasCorrector {
        &self.corrector
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn store_mode(&self) -> StoreMode {
        self.mode
    }

    /// Initial state at `x0` (zero when `None`).
    pub fn init(&self, x0: Option<Vec<f64>>, init: JacobianInit, seed: u64) -> Result<SolverState> {
        let (n, d) = (self.problem.n(), self.problem.d());
        let x = x0.unwrap_or_else(|| vec![0.0; d]);
        if x.len() != d {
            return Err(Error::DimensionMismatch { what: "initial point", expected: d, got: x.len() });
        }
        let store = match self.mode {
            StoreMode::DualScalars => JacobianStore::DualScalars {
                duals: match init {
                    JacobianInit::Zeros => vec![0.0; n],
                    JacobianInit::AtX0 => (0..n).map(|i| self.problem.dual(i, &x)).collect(),
                },
            },
            _ => {
                let mut cols = vec![0.0; n * d];
                if init == JacobianInit::AtX0 {
                    for i in 0..n {
                        self.problem.partial_grad_into(i, &x, &mut cols[i * d..(i + 1) * d]);
                    }
                }
                JacobianStore::Dense { cols, d }
            }
        };
        let mut running_sum = vec![0.0; d];
        accumulate_sum(&store, self.problem, &mut running_sum);
        Ok(SolverState {
            x,
            store,
            running_sum,
            k: 0,
            touched: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
            n,
            since_refresh: 0,
            work: Workspace::default(),
        })
    }

    /// Fills `work.grad` with the estimate for `subset` and `work.fresh` with
    /// the fresh duals or gradients, reading the current table.
    fn estimate(&self, state: &SolverState, subset: &[usize], work: &mut Workspace) -> Result<()> {
        let d = self.problem.d();
        let lambda = self.problem.lambda();
        self.corrector.weights_into(&self.stats, subset, &mut work.weights)?;
        work.grad.clear();
        work.grad.extend_from_slice(&state.running_sum);
        work.fresh.clear();
        match &state.store {
            JacobianStore::DualScalars { duals } => {
                for (&i, &theta) in subset.iter().zip(&work.weights) {
                    let fresh = self.problem.dual(i, &state.x);
                    work.fresh.push(fresh);
                    self.problem.data().row(i).axpy(lambda[i] * theta * (fresh - duals[i]), &mut work.grad);
                }
            }
            JacobianStore::Dense { cols, .. } => {
                work.fresh.resize(subset.len() * d, 0.0);
                for (k, (&i, &theta)) in subset.iter().zip(&work.weights).enumerate() {
                    let fresh = &mut work.fresh[k * d..(k + 1) * d];
                    self.problem.partial_grad_into(i, &state.x, fresh);
                    let coef = lambda[i] * theta;
                    let old = &cols[i * d..(i + 1) * d];
                    for ((g, f), o) in work.grad.iter_mut().zip(fresh.iter()).zip(old) {
                        *g += coef * (f - o);
                    }
                }
            }
        }
        Ok(())
    }

    /// The estimate `g` for a given subset, and the fresh per-index values
    /// (duals, or stacked dense gradients) that would enter the table.
    pub fn grad_estimate(&self, state: &SolverState, subset: &[usize]) -> Result<(Vec<f64>, Vec<f64>)> {
        let mut work = Workspace::default();
        self.estimate(state, subset, &mut work)?;
        Ok((work.grad, work.fresh))
    }

    /// One iteration on a given (sorted) subset.
    pub fn step_with_subset(&self, state: &mut SolverState, subset: &[usize]) -> Result<()> {
        let mut work = core::mem::take(&mut state.work);
        let result = self.apply_step(state, subset, &mut work);
        state.work = work;
        result
    }

    /// One iteration on a freshly drawn subset.
    pub fn step(&self, state: &mut SolverState) -> Result<()> {
        let mut work = core::mem::take(&mut state.work);
        let mut subset = core::mem::take(&mut work.subset);
        self.sampling.draw_with(&mut state.rng, &mut work.perm, &mut subset);
        let result = self.apply_step(state, &subset, &mut work);
        work.subset = subset;
        state.work = work;
        result
    }

    fn apply_step(&self, state: &mut SolverState, subset: &[usize], work: &mut Workspace) -> Result<()> {
        self.estimate(state, subset, work)?;
        let d = self.problem.d();
        let lambda = self.problem.lambda();
        axpy(-self.alpha, &work.grad, &mut state.x);
        self.problem.regularizer().prox_in_place(self.alpha, &mut state.x);

        match &mut state.store {
            JacobianStore::DualScalars { duals } => {
                for (&i, &fresh) in subset.iter().zip(&work.fresh) {
                    let delta = fresh - duals[i];
                    self.problem.data().row(i).axpy(lambda[i] * delta, &mut state.running_sum);
                    duals[i] = fresh;
                }
            }
            JacobianStore::Dense { cols, .. } => {
                for (k, &i) in subset.iter().enumerate() {
                    let fresh = &work.fresh[k * d..(k + 1) * d];
                    let col = &mut cols[i * d..(i + 1) * d];
                    for ((u, c), f) in state.running_sum.iter_mut().zip(col.iter_mut()).zip(fresh) {
                        *u += lambda[i] * (f - *c);
                        *c = *f;
                    }
                }
            }
        }
        state.since_refresh += subset.len();
        if state.since_refresh >= state.n {
            let mut u = core::mem::take(&mut state.running_sum);
            accumulate_sum(&state.store, self.problem, &mut u);
            state.running_sum = u;
            state.since_refresh = 0;
        }
        state.k += 1;
        state.touched += subset.len() as u64;

        let norm = norm_inf(&state.x);
        if !(norm <= DIVERGENCE_LIMIT) {
            return Err(Error::NumericalDivergence { iteration: state.k, norm });
        }
        Ok(())
    }

    fn record(&self, state: &SolverState, opts: &RunOptions<'_>) -> TraceRecord {
        TraceRecord {
            k: state.k,
            passes: state.passes(),
            objective: self.problem.objective(&state.x),
            dist_sq: opts.reference.map(|r| dist_sq(&state.x, r)),
            lyapunov: opts.lyapunov.map(|f| f(state)),
            wall_ms: opts.clock.map(|c| c.elapsed_ms()),
        }
    }

    /// Iterates until the pass or iteration budget is spent or the target is
    /// met, recording every `record_every` passes plus the initial and final
    /// states.
    pub fn run(&self, state: &mut SolverState, opts: &RunOptions<'_>) -> Result<Trace> {
        let mut trace = Trace::default();
        let first = self.record(state, opts);
        let initial_gap = first.objective;
        let initial_lyapunov = first.lyapunov;
        let met = |rec: &TraceRecord| match opts.target {
            Some(Target::RelativeGap { p_star, eps }) => {
                let base = initial_gap - p_star;
                rec.objective - p_star <= eps * base
            }
            Some(Target::Lyapunov { eps }) => match (rec.lyapunov, initial_lyapunov) {
                (Some(v), Some(v0)) => v <= eps * v0,
                _ => false,
            },
            None => false,
        };
        let start_passes = state.passes();
        let cadence = if opts.record_every > 0.0 { opts.record_every } else { 1.0 };
        let mut next_record = start_passes + cadence;
        let done_at_start = met(&first);
        if done_at_start {
            trace.target_reached_at = Some(first.passes);
        }
        trace.records.push(first);
        if done_at_start {
            return Ok(trace);
        }
        loop {
            let iters_done = opts.max_iters.is_some_and(|m| state.k >= m);
            if iters_done || state.passes() - start_passes >= opts.max_passes {
                break;
            }
            self.step(state)?;
            if state.passes() >= next_record {
                while next_record <= state.passes() {
                    next_record += cadence;
                }
                let rec = self.record(state, opts);
                let hit = met(&rec);
                trace.records.push(rec);
                if hit {
                    trace.target_reached_at = Some(state.passes());
                    return Ok(trace);
                }
            }
        }
        if trace.records.last().is_some_and(|r| r.k != state.k) {
            let rec = self.record(state, opts);
            if met(&rec) {
                trace.target_reached_at = Some(rec.passes);
            }
            trace.records.push(rec);
        }
        Ok(trace)
    }
}
