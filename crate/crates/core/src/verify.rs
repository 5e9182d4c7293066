//! Exhaustive verification oracles and the stock validation suite.
//!
//! Every check here takes expectations by enumerating a sampling's support,
//! so the instances are small. The suite functions are shared by the
//! command-line `validate` subcommand and the acceptance tests.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::linalg::{solve_symmetric, symmetric_eigen};
use crate::lyapunov::{self, SolutionOracle};
use crate::math::{dot, norm_sq};
use crate::model::{Dataset, LossKind, Problem};
use crate::planner::{self, EsoCheckMode};
use crate::prox::Regularizer;
use crate::reference::{prox_gradient, ReferenceOptions};
use crate::sampling::{self, stats_from_support, BiasCorrector, Sampling, WeightTable};
use crate::solver::{JacobianInit, JacobianStore, Saga, SolverState};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// `sum_C p_C g(C)` over the support of the solver's sampling.
pub fn expected_estimate(saga: &Saga<'_>, state: &SolverState) -> Result<Vec<f64>> {
    let mut mean = vec![0.0; saga.problem().d()];
    for (subset, prob) in saga.sampling().support()? {
        let (g, _) = saga.grad_estimate(state, &subset)?;
        mean.iter_mut().zip(&g).for_each(|(m, gi)| *m += prob * gi);
    }
    Ok(mean)
}

/// `E[value(next state)]` over one step, exhaustively over the support.
pub fn expected_after_step<F>(saga: &Saga<'_>, state: &SolverState, mut value: F) -> Result<f64>
where
    F: FnMut(&SolverState) -> Result<f64>,
{
    let mut total = 0.0;
    for (subset, prob) in saga.sampling().support()? {
        let mut next = state.clone();
        saga.step_with_subset(&mut next, &subset)?;
        total += prob * value(&next)?;
    }
    Ok(total)
}

/// Replaces the iterate and the table with Gaussian values of the given scale.
pub fn randomize_state<R: Rng + ?Sized>(saga: &Saga<'_>, state: &mut SolverState, rng: &mut R, scale: f64) {
    state.x.iter_mut().for_each(|v| *v = scale * gaussian(rng));
    randomize_table(state, rng, scale);
    state.running_sum = state.exact_running_sum(saga.problem());
}

fn randomize_table<R: Rng + ?Sized>(state: &mut SolverState, rng: &mut R, scale: f64) {
    match &mut state.store {
        JacobianStore::Dense { cols, .. } => cols.iter_mut().for_each(|v| *v = scale * gaussian(rng)),
        JacobianStore::DualScalars { duals } => duals.iter_mut().for_each(|v| *v = scale * gaussian(rng)),
    }
}

/// Sets the table to the gradients at `point`.
pub fn set_table_at(saga: &Saga<'_>, state: &mut SolverState, point: &[f64]) {
    let problem = saga.problem();
    match &mut state.store {
        JacobianStore::Dense { cols, d } => {
            for i in 0..problem.n() {
                problem.partial_grad_into(i, point, &mut cols[i * *d..(i + 1) * *d]);
            }
        }
        JacobianStore::DualScalars { duals } => {
            for (i, a) in duals.iter_mut().enumerate() {
                *a = problem.dual(i, point);
            }
        }
    }
    state.running_sum = state.exact_running_sum(problem);
}

/// Dense `sum_i w_i a_i a_i^T` over the given rows.
pub fn gram(data: &Dataset, rows: &[usize], weights: &[f64]) -> Vec<f64> {
    let d = data.d();
    let mut m = vec![0.0; d * d];
    for (&i, &w) in rows.iter().zip(weights) {
        let r = data.row(i);
        for (&j, a) in r.indices.iter().zip(r.values) {
            for (&k, b) in r.indices.iter().zip(r.values) {
                m[j * d + k] += w * a * b;
            }
        }
    }
    m
}

/// Outcome of one validation check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// The quantity compared against `tolerance` (an error or an excess).
    pub metric: f64,
    pub tolerance: f64,
    /// Largest observed `E[Psi_next] / (factor * Psi)` for contraction checks.
    pub max_ratio: Option<f64>,
    pub cases: usize,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, metric: f64, tolerance: f64, max_ratio: Option<f64>, cases: usize, detail: String) -> Self {
        Self {
            name: name.into(),
            passed: metric <= tolerance,
            metric,
            tolerance,
            max_ratio,
            cases,
            detail,
        }
    }
}

/// Knobs of the stock suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Random states per instance in contraction checks.
    pub states: usize,
    /// Multiplier applied to `beta` before planning the smooth step size;
    /// anything but one is a deliberate misconfiguration.
    pub beta_scale: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self { seed: 2024, states: 50, beta_scale: 1.0 }
    }
}

/// Random probabilities in `[lo, 1]`.
fn probs<R: Rng + ?Sized>(rng: &mut R, n: usize, lo: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(lo..=1.0)).collect()
}

fn normalized(mut v: Vec<f64>) -> Vec<f64> {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// A random partition of `0..n` into at most `groups` nonempty groups.
pub fn random_partition<R: Rng + ?Sized>(rng: &mut R, n: usize, groups: usize) -> Vec<Vec<usize>> {
    let mut perm: Vec<usize> = (0..n).collect();
    for k in (1..n).rev() {
        perm.swap(k, rng.random_range(0..=k));
    }
    let groups = groups.clamp(1, n);
    let mut out = vec![Vec::new(); groups];
    for (k, &i) in perm.iter().enumerate() {
        let g = if k < groups { k } else { rng.random_range(0..groups) };
        out[g].push(i);
    }
    out
}

/// A random enumerated sampling: a few random subsets, one more covering any
/// index left out, and occasionally the empty set.
pub fn random_enumerated<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<Sampling> {
    let count = rng.random_range(1..=5);
    let mut subsets: Vec<Vec<usize>> = Vec::new();
    let mut covered = vec![false; n];
    for _ in 0..count {
        let s: Vec<usize> = (0..n).filter(|_| rng.random_bool(0.5)).collect();
        if s.is_empty() || subsets.contains(&s) {
            continue;
        }
        s.iter().for_each(|&i| covered[i] = true);
        subsets.push(s);
    }
    let rest: Vec<usize> = (0..n).filter(|&i| !covered[i]).collect();
    if !rest.is_empty() {
        subsets.push(rest);
    }
    if rng.random_bool(0.3) {
        subsets.push(Vec::new());
    }
    let p = normalized(probs(rng, subsets.len(), 0.2));
    Sampling::enumerated(n, subsets.into_iter().zip(p).collect())
}

/// One random sampling of each kind over `0..n`.
pub fn random_samplings<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Result<Vec<Sampling>> {
    let tau = rng.random_range(1..=n);
    Ok(vec![
        Sampling::serial(normalized(probs(rng, n, 0.2)))?,
        Sampling::tau_nice(n, tau)?,
        Sampling::independent(probs(rng, n, 0.2))?,
        {
            let groups = random_partition(rng, n, 2);
            let g = groups.len();
            Sampling::partition(n, groups, normalized(probs(rng, g, 0.2)))?
        },
        random_enumerated(rng, n)?,
    ])
}

fn dense_problem<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    d: usize,
    loss: LossKind,
    reg: Regularizer,
    ridge: f64,
) -> Result<Problem> {
    let m: Vec<f64> = (0..n * d).map(|_| gaussian(rng)).collect();
    let t: Vec<f64> = match loss {
        LossKind::Logistic => (0..n).map(|_| if rng.random_bool(0.5) { 1.0 } else { -1.0 }).collect(),
        LossKind::SquaredError => (0..n).map(|_| gaussian(rng)).collect(),
    };
    Problem::new(Dataset::from_dense(d, &m, t)?, loss, None, reg)?.with_smooth_ridge(ridge)
}

/// Exhaustive mean of the estimator against the full gradient on random
/// states, for every sampling kind and weight family.
pub fn unbiasedness_check(cfg: &SuiteConfig, states: usize) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut worst = 0.0f64;
    let mut cases = 0;
    while cases < states {
        let n = rng.random_range(2..=8);
        let d = rng.random_range(1..=4);
        let loss = if rng.random_bool(0.5) { LossKind::Logistic } else { LossKind::SquaredError };
        let ridge = if rng.random_bool(0.5) { 0.3 } else { 0.0 };
        let problem = dense_problem(&mut rng, n, d, loss, Regularizer::Zero, ridge)?;
        let mut samplings = random_samplings(&mut rng, n)?;
        let groups = random_partition(&mut rng, n, 3);
        let g = groups.len();
        samplings.push(Sampling::partition(n, groups, normalized(probs(&mut rng, g, 0.2)))?);
        samplings.push(random_enumerated(&mut rng, n)?);
        samplings.push(random_enumerated(&mut rng, n)?);
        for sampling in samplings {
            let table = WeightTable::random_valid(&sampling, &mut rng)?;
            for corrector in [
                BiasCorrector::MarginalInverse,
                BiasCorrector::SizeOptimal,
                BiasCorrector::ExplicitTable(table),
            ] {
                let saga = Saga::new(&problem, sampling.clone(), corrector, 0.1)?;
                let mut state = saga.init(None, JacobianInit::Zeros, 0)?;
                randomize_state(&saga, &mut state, &mut rng, 1.0);
                let mean = expected_estimate(&saga, &state)?;
                let exact = problem.full_grad(&state.x);
                let err = mean.iter().zip(&exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                worst = worst.max(err);
                cases += 1;
            }
        }
    }
    Ok(CheckOutcome::new(
        "unbiased gradient estimate",
        worst,
        1e-12,
        None,
        cases,
        format!("max |E[g] - grad f| = {worst:.3e}"),
    ))
}

/// Closed-form statistics and `beta` against direct summation over the
/// enumerated support of random samplings.
pub fn sampling_stats_check(cfg: &SuiteConfig, instances: usize) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5a);
    let mut worst = 0.0f64;
    let mut cases = 0;
    let diff = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    while cases < instances {
        let n = rng.random_range(1..=10);
        for s in random_samplings(&mut rng, n)? {
            let support = s.support()?;
            let closed = s.stats();
            let summed = stats_from_support(n, &support);
            worst = worst
                .max(diff(&closed.p, &summed.p))
                .max(diff(&closed.cond_size, &summed.cond_size))
                .max(diff(&closed.cond_inv_size, &summed.cond_inv_size))
                .max((closed.tau - summed.tau).abs());
            for corrector in [BiasCorrector::MarginalInverse, BiasCorrector::SizeOptimal] {
                let fast = sampling::beta(&s, &closed, &corrector)?;
                let mut slow = vec![0.0; n];
                for (subset, prob) in &support {
                    for &i in subset {
                        let theta = corrector.weight(&summed, subset, i)?;
                        slow[i] += prob * subset.len() as f64 * theta * theta;
                    }
                }
                worst = worst.max(diff(&fast, &slow));
                worst = worst.max(corrector.unbiasedness_residual(&s, &closed)?);
            }
            cases += 1;
        }
    }
    Ok(CheckOutcome::new(
        "sampling statistics",
        worst,
        1e-10,
        None,
        cases,
        format!("max closed-form vs enumeration deviation = {worst:.3e}"),
    ))
}

/// ESO ratios for serial and tau-nice constants on random sparse instances.
pub fn eso_suite_check(cfg: &SuiteConfig, instances: usize) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xe50);
    let mut worst = 0.0f64;
    let mut sparse_gain = 0usize;
    for case in 0..instances {
        let n = rng.random_range(2..=8);
        let d = rng.random_range(2..=6);
        let density = rng.random_range(0.2..0.8);
        let rows: Vec<Vec<(usize, f64)>> = (0..n)
            .map(|_| {
                let mut r: Vec<(usize, f64)> = Vec::new();
                for j in 0..d {
                    if rng.random_bool(density) {
                        r.push((j, gaussian(&mut rng)));
                    }
                }
                if r.is_empty() {
                    r.push((rng.random_range(0..d), gaussian(&mut rng)));
                }
                r
            })
            .collect();
        let data = Dataset::from_rows(d, rows, vec![0.0; n])?;
        let serial = Sampling::serial(normalized(probs(&mut rng, n, 0.2)))?;
        let v = planner::eso_serial(&data).v;
        worst = worst.max(planner::eso_check(&data, &serial, &v, EsoCheckMode::Exhaustive, case as u64)?);
        let tau = rng.random_range(1..=n);
        let nice = Sampling::tau_nice(n, tau)?;
        let eso = planner::eso_tau_nice(&data, tau)?;
        worst = worst.max(planner::eso_check(&data, &nice, &eso.v, EsoCheckMode::Exhaustive, case as u64)?);
        if (0..n).any(|i| eso.v[i] < tau as f64 * data.row(i).norm_sq() * (1.0 - 1e-12)) {
            sparse_gain += 1;
        }
    }
    let excess = (worst - 1.0).max(0.0);
    Ok(CheckOutcome::new(
        "ESO inequality",
        excess,
        1e-8,
        Some(worst),
        instances,
        format!("max ratio = {worst:.12}; {sparse_gain} instances with v_i < tau |a_i|^2"),
    ))
}

struct ContractionTally {
    excess: f64,
    ratio: f64,
    cases: usize,
}

impl ContractionTally {
    fn new() -> Self {
        Self { excess: f64::NEG_INFINITY, ratio: 0.0, cases: 0 }
    }

    fn add(&mut self, before: f64, after: f64, factor: f64) {
        self.excess = self.excess.max(after - factor * before);
        if before > 0.0 {
            self.ratio = self.ratio.max(after / (factor * before));
        }
        self.cases += 1;
    }
}

/// Exact minimizer of a ridge-regularized least-squares problem and the
/// strong-convexity constant of its smooth part.
fn ridge_solution(problem: &Problem) -> (Vec<f64>, f64) {
    let data = problem.data();
    let n = problem.n();
    let d = problem.d();
    let lambda = problem.lambda();
    let r = problem.smooth_ridge() * lambda.iter().sum::<f64>();
    let rows: Vec<usize> = (0..n).collect();
    let mut h = gram(data, &rows, lambda);
    for j in 0..d {
        h[j * d + j] += r;
    }
    let mut rhs = vec![0.0; d];
    for i in 0..n {
        data.row(i).axpy(lambda[i] * data.targets()[i], &mut rhs);
    }
    let (eig, _) = symmetric_eigen(&h, d);
    (solve_symmetric(&h, d, &rhs), eig[0])
}

fn ridge_instance<R: Rng + ?Sized>(rng: &mut R) -> Result<Problem> {
    let n = rng.random_range(2..=5);
    let d = rng.random_range(1..=4);
    let ridge = rng.random_range(0.05..0.5);
    dense_problem(rng, n, d, LossKind::SquaredError, Regularizer::Zero, ridge)
}

/// Unit eigenvectors of the smallest and largest eigenvalue of `sum_i lambda_i a_i a_i^T`.
fn extreme_directions(problem: &Problem) -> (Vec<f64>, Vec<f64>) {
    let rows: Vec<usize> = (0..problem.n()).collect();
    let h = gram(problem.data(), &rows, problem.lambda());
    let (_, vecs) = symmetric_eigen(&h, problem.d());
    (vecs[0].clone(), vecs[vecs.len() - 1].clone())
}

/// Smooth strongly convex case: `E[Psi_next] <= (1 - mu alpha) E[Psi]` over
/// random and structured states, for each weight family.
pub fn smooth_contraction_check(cfg: &SuiteConfig, instances: usize) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7e1);
    let mut tally = ContractionTally::new();
    for _ in 0..instances {
        let base = ridge_instance(&mut rng)?;
        let (xstar, mu) = ridge_solution(&base);
        let problem = base.with_mu(mu)?;
        let n = problem.n();
        let (low, high) = extreme_directions(&problem);
        for sampling in random_samplings(&mut rng, n)? {
            let stats = sampling.stats();
            let table = WeightTable::random_valid(&sampling, &mut rng)?;
            for corrector in [
                BiasCorrector::MarginalInverse,
                BiasCorrector::SizeOptimal,
                BiasCorrector::ExplicitTable(table),
            ] {
                let beta: Vec<f64> =
                    sampling::beta(&sampling, &stats, &corrector)?.iter().map(|b| b * cfg.beta_scale).collect();
                let plan = planner::stepsize_smooth(mu, problem.row_smoothness(), problem.lambda(), &stats, &beta)?;
                let saga = Saga::new(&problem, sampling.clone(), corrector, plan.alpha)?;
                let factor = 1.0 - mu * plan.alpha;
                let psi = |s: &SolverState| lyapunov::smooth_expected(&saga, s, &plan.sigma, &xstar);
                let mut check = |state: &SolverState| -> Result<()> {
                    let before = psi(state)?;
                    let after = expected_after_step(&saga, state, psi)?;
                    tally.add(before, after, factor);
                    Ok(())
                };
                let template = saga.init(Some(xstar.clone()), JacobianInit::AtX0, 0)?;
                // the table at the optimum, iterate displaced along extreme curvature
                for dir in [&low, &high] {
                    let mut s = template.clone();
                    s.x.iter_mut().zip(dir).for_each(|(x, v)| *x += v);
                    check(&s)?;
                }
                // iterate at the optimum, random table
                let mut s = template.clone();
                randomize_table(&mut s, &mut rng, 1.0);
                s.running_sum = s.exact_running_sum(&problem);
                check(&s)?;
                for _ in 0..cfg.states {
                    let mut s = template.clone();
                    randomize_state(&saga, &mut s, &mut rng, 1.0);
                    if rng.random_bool(0.3) {
                        let x = s.x.clone();
                        set_table_at(&saga, &mut s, &x);
                    }
                    check(&s)?;
                }
            }
        }
    }
    Ok(contraction_outcome("smooth strongly convex contraction", tally, 1e-10))
}

fn contraction_outcome(name: &str, tally: ContractionTally, slack: f64) -> CheckOutcome {
    CheckOutcome::new(
        name,
        tally.excess,
        slack,
        Some(tally.ratio),
        tally.cases,
        format!("max E[Psi_next]/(factor Psi) = {:.12}, max excess = {:.3e}", tally.ratio, tally.excess),
    )
}

fn eso_for(data: &Dataset, sampling: &Sampling) -> Result<Vec<f64>> {
    Ok(match sampling.kind() {
        sampling::SamplingKind::Serial { .. } => planner::eso_serial(data).v,
        sampling::SamplingKind::TauNice { tau } => planner::eso_tau_nice(data, *tau)?.v,
        _ => planner::eso_generic(data, &sampling.stats()).v,
    })
}

/// Strongly convex regularizer: `E[Psi_next] <= Psi / (1 + alpha mu)` on
/// lasso plus ridge instances.
pub fn strong_contraction_check(cfg: &SuiteConfig, instances: usize) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5715);
    let mut tally = ContractionTally::new();
    for _ in 0..instances {
        let n = rng.random_range(2..=4);
        let d = rng.random_range(1..=3);
        let l2 = rng.random_range(0.05..0.5);
        let reg = Regularizer::ElasticNet { l1: rng.random_range(0.01..0.2), l2 };
        let problem = dense_problem(&mut rng, n, d, LossKind::SquaredError, reg, 0.0)?;
        let xstar = prox_gradient(&problem, &ReferenceOptions::default())?.x;
        let oracle = SolutionOracle::Unique(xstar.clone());
        for sampling in random_samplings(&mut rng, n)? {
            let stats = sampling.stats();
            let v = eso_for(problem.data(), &sampling)?;
            let plan = planner::stepsize_strong(l2, &v, problem.lambda(), problem.gamma(), &stats)?;
            let saga = Saga::new(&problem, sampling, BiasCorrector::MarginalInverse, plan.alpha)?;
            let factor = 1.0 / (1.0 + plan.alpha * l2);
            let psi =
                |s: &SolverState| lyapunov::composite(&problem, s, &stats, &plan.sigma, &v, plan.alpha, &oracle);
            let template = saga.init(Some(xstar.clone()), JacobianInit::AtX0, 0)?;
            for k in 0..cfg.states {
                let mut s = template.clone();
                if k > 0 {
                    randomize_state(&saga, &mut s, &mut rng, 1.0);
                }
                let before = psi(&s)?;
                let after = expected_after_step(&saga, &s, psi)?;
                tally.add(before, after, factor);
            }
        }
    }
    Ok(contraction_outcome("strongly convex regularizer contraction", tally, 1e-9))
}

/// Quadratic growth without strong convexity: `E[Psi_next] <=
/// (1 + alpha mu/2)/(1 + alpha mu) Psi` on underdetermined consistent least
/// squares, with the affine solution-set projector.
pub fn growth_contraction_check(cfg: &SuiteConfig, instances: usize) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x6a0);
    let mut tally = ContractionTally::new();
    for _ in 0..instances {
        let n = rng.random_range(2..=4);
        let d = n + rng.random_range(1..=2);
        let m: Vec<f64> = (0..n * d).map(|_| gaussian(&mut rng)).collect();
        let x_true: Vec<f64> = (0..d).map(|_| gaussian(&mut rng)).collect();
        let y: Vec<f64> = m.chunks(d).map(|r| dot(r, &x_true)).collect();
        let problem =
            Problem::new(Dataset::from_dense(d, &m, y)?, LossKind::SquaredError, None, Regularizer::Zero)?;
        let rows: Vec<usize> = (0..n).collect();
        let (eig, _) = symmetric_eigen(&gram(problem.data(), &rows, problem.lambda()), d);
        let top = eig[d - 1];
        let mu = eig.iter().copied().find(|&e| e > 1e-10 * top).unwrap_or(top);
        let l_total = top.max(problem.smoothness());
        let oracle = SolutionOracle::affine(&problem, x_true.clone());
        for sampling in random_samplings(&mut rng, n)? {
            let stats = sampling.stats();
            let v = eso_for(problem.data(), &sampling)?;
            for known in [Some(mu), None] {
                let plan = planner::stepsize_growth(known, l_total, &v, problem.lambda(), problem.gamma(), &stats)?;
                let saga = Saga::new(&problem, sampling.clone(), BiasCorrector::MarginalInverse, plan.alpha)?;
                let factor = (1.0 + plan.alpha * mu / 2.0) / (1.0 + plan.alpha * mu);
                let psi = |s: &SolverState| {
                    lyapunov::composite(&problem, s, &stats, &plan.sigma, &v, plan.alpha, &oracle)
                };
                let template = saga.init(Some(x_true.clone()), JacobianInit::AtX0, 0)?;
                for _ in 0..cfg.states {
                    let mut s = template.clone();
                    randomize_state(&saga, &mut s, &mut rng, 1.0);
                    let before = psi(&s)?;
                    let after = expected_after_step(&saga, &s, psi)?;
                    tally.add(before, after, factor);
                }
            }
        }
    }
    Ok(contraction_outcome("quadratic growth contraction", tally, 1e-9))
}

/// Partition sampling: `E[Psi_next] <= (1 - mu alpha) E[Psi]` with
/// `sigma_C = n/(4 L_C |C|)`.
pub fn partition_contraction_check(cfg: &SuiteConfig, instances: usize) -> Result<CheckOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9a7);
    let mut tally = ContractionTally::new();
    for case in 0..instances {
        let (n, d) = (4, rng.random_range(2..=3));
        let ridge = rng.random_range(0.05..0.3);
        let base = dense_problem(&mut rng, n, d, LossKind::SquaredError, Regularizer::Zero, ridge)?;
        let (xstar, mu) = ridge_solution(&base);
        let problem = base.with_mu(mu)?;
        let groups = if case % 2 == 0 { vec![vec![0, 1], vec![2, 3]] } else { vec![vec![0], vec![1, 2, 3]] };
        let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
        let group_l: Vec<f64> = groups
            .iter()
            .map(|g| {
                let w = vec![1.0 / g.len() as f64; g.len()];
                let (eig, _) = symmetric_eigen(&gram(problem.data(), g, &w), d);
                eig[d - 1] / problem.gamma() + problem.smooth_ridge()
            })
            .collect();
        let importance = planner::importance_partition(mu, &group_l, &sizes, n)?.probs;
        for group_probs in [importance, vec![0.5, 0.5]] {
            let plan = planner::stepsize_partition(mu, &group_l, &sizes, &group_probs, n)?;
            let saga = Saga::partition(&problem, groups.clone(), group_probs.clone(), plan.alpha)?;
            let factor = 1.0 - mu * plan.alpha;
            let psi = |s: &SolverState| {
                lyapunov::partition_expected(&saga, s, &groups, &group_probs, &plan.sigma, &xstar)
            };
            let template = saga.init(Some(xstar.clone()), JacobianInit::AtX0, 0)?;
            for _ in 0..cfg.states {
                let mut s = template.clone();
                randomize_state(&saga, &mut s, &mut rng, 1.0);
                let before = psi(&s)?;
                let after = expected_after_step(&saga, &s, psi)?;
                tally.add(before, after, factor);
            }
        }
    }
    Ok(contraction_outcome("partition sampling contraction", tally, 1e-10))
}

/// The stock validation suite.
pub fn stock_suite(cfg: &SuiteConfig) -> Result<Vec<CheckOutcome>> {
    Ok(vec![
        unbiasedness_check(cfg, 100)?,
        sampling_stats_check(cfg, 200)?,
        eso_suite_check(cfg, 100)?,
        smooth_contraction_check(cfg, 4)?,
        strong_contraction_check(cfg, 3)?,
        growth_contraction_check(cfg, 3)?,
        partition_contraction_check(cfg, 2)?,
    ])
}

/// `|x|^2`, re-exported for callers sizing initial distances.
pub fn sq_norm(x: &[f64]) -> f64 {
    norm_sq(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_check_detects_halved_beta() {
        let good = smooth_contraction_check(&SuiteConfig { states: 10, ..Default::default() }, 2).unwrap();
        assert!(good.passed, "{good:?}");
        let bad = smooth_contraction_check(&SuiteConfig { states: 10, beta_scale: 0.5, ..Default::default() }, 2)
            .unwrap();
        assert!(!bad.passed, "{bad:?}");
    }

    #[test]
    fn random_partitions_cover() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..10 {
            let mut all: Vec<usize> = random_partition(&mut rng, n, 3).concat();
            all.sort_unstable();
            assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
    }
}
