//! Acceptance suite: one test per criterion, each printing a single
//! PASS/FAIL line with the measured quantity.

use std::time::{Duration, Instant};

use saga_core::linalg::{solve_symmetric, symmetric_eigen};
use saga_core::planner::{self, EsoParams};
use saga_core::reference::{prox_gradient, ReferenceOptions};
use saga_core::solver::{RunOptions, Target};
use saga_core::verify::{self, CheckOutcome, SuiteConfig};
use saga_core::{synth, BiasCorrector, JacobianInit, LossKind, Problem, Regularizer, Saga, Sampling};

fn report(id: u32, name: &str, passed: bool, detail: &str, elapsed: Duration, limit: Duration) {
    let in_time = elapsed <= limit;
    let verdict = if passed && in_time { "PASS" } else { "FAIL" };
    println!(
        "criterion {id:>2} {verdict}: {name}: {detail} [{:.2}s, limit {}s]",
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    assert!(passed, "criterion {id} failed: {detail}");
    assert!(in_time, "criterion {id} exceeded its time limit");
}

fn report_check(id: u32, outcome: &CheckOutcome, elapsed: Duration, limit: Duration) {
    let detail = format!(
        "{} (metric {:.3e} vs tolerance {:.0e}, {} cases)",
        outcome.detail, outcome.metric, outcome.tolerance, outcome.cases
    );
    report(id, &outcome.name, outcome.passed, &detail, elapsed, limit);
}

fn cfg() -> SuiteConfig {
    SuiteConfig { seed: 2024, states: 50, beta_scale: 1.0 }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Exact minimizer and strong-convexity constant of a ridge least-squares problem.
fn ridge_optimum(problem: &Problem) -> (Vec<f64>, f64) {
    let n = problem.n();
    let d = problem.d();
    let rows: Vec<usize> = (0..n).collect();
    let mut h = verify::gram(problem.data(), &rows, problem.lambda());
    let r = problem.smooth_ridge() * problem.lambda().iter().sum::<f64>();
    for j in 0..d {
        h[j * d + j] += r;
    }
    let mut rhs = vec![0.0; d];
    for i in 0..n {
        problem.data().row(i).axpy(problem.lambda()[i] * problem.data().targets()[i], &mut rhs);
    }
    let (eig, _) = symmetric_eigen(&h, d);
    (solve_symmetric(&h, d, &rhs), eig[0])
}

/// Passes until the relative gap drops to `eps`, or `None` within the budget.
fn passes_to(saga: &Saga<'_>, p_star: f64, eps: f64, seed: u64, max_passes: f64, cadence: f64) -> Option<f64> {
    let mut state = saga.init(None, JacobianInit::AtX0, seed).unwrap();
    let opts = RunOptions {
        max_passes,
        record_every: cadence,
        target: Some(Target::RelativeGap { p_star, eps }),
        ..Default::default()
    };
    saga.run(&mut state, &opts).unwrap().target_reached_at
}

#[test]
fn criterion_01_unbiasedness() {
    let t = Instant::now();
    let out = verify::unbiasedness_check(&cfg(), 100).unwrap();
    report_check(1, &out, t.elapsed(), Duration::from_secs(10));
}

#[test]
fn criterion_02_sampling_statistics() {
    let t = Instant::now();
    let out = verify::sampling_stats_check(&cfg(), 200).unwrap();
    report_check(2, &out, t.elapsed(), Duration::from_secs(30));
}

#[test]
fn criterion_03_smooth_contraction() {
    let t = Instant::now();
    let out = verify::smooth_contraction_check(&cfg(), 4).unwrap();
    report_check(3, &out, t.elapsed(), Duration::from_secs(60));
}

#[test]
fn criterion_04_composite_contraction() {
    let t = Instant::now();
    let strong = verify::strong_contraction_check(&cfg(), 3).unwrap();
    let growth = verify::growth_contraction_check(&cfg(), 3).unwrap();
    let detail = format!(
        "strongly convex regularizer: excess {:.3e}, max ratio {:.9}; quadratic growth: excess {:.3e}, max ratio {:.9} (slack 1e-9)",
        strong.metric,
        strong.max_ratio.unwrap_or(f64::NAN),
        growth.metric,
        growth.max_ratio.unwrap_or(f64::NAN)
    );
    report(
        4,
        "composite contraction",
        strong.passed && growth.passed,
        &detail,
        t.elapsed(),
        Duration::from_secs(120),
    );
}

#[test]
fn criterion_05_partition_contraction() {
    let t = Instant::now();
    let out = verify::partition_contraction_check(&cfg(), 2).unwrap();
    report_check(5, &out, t.elapsed(), Duration::from_secs(60));
}

#[test]
fn criterion_06_end_to_end_rate() {
    let t = Instant::now();
    let (data, _) = synth::least_squares(200, 20, 0.5, 6).unwrap();
    let problem = Problem::new(data, LossKind::SquaredError, None, Regularizer::Zero)
        .unwrap()
        .with_smooth_ridge(1e-2)
        .unwrap();
    let mu = problem.mu().unwrap();
    let (xstar, _) = ridge_optimum(&problem);
    let sampling = Sampling::uniform_serial(200).unwrap();
    let stats = sampling.stats();
    let beta = saga_core::sampling::beta(&sampling, &stats, &BiasCorrector::MarginalInverse).unwrap();
    let plan = planner::stepsize_smooth(mu, problem.row_smoothness(), problem.lambda(), &stats, &beta).unwrap();
    let k = plan.predicted_iters(1e-6).unwrap().ceil() as u64;
    let saga = Saga::new(&problem, sampling, BiasCorrector::MarginalInverse, plan.alpha).unwrap();
    let d0: f64 = xstar.iter().map(|v| v * v).sum();
    let mut ratios = Vec::new();
    for seed in 0..16 {
        let mut state = saga.init(None, JacobianInit::AtX0, seed).unwrap();
        for _ in 0..k {
            saga.step(&mut state).unwrap();
        }
        let dist: f64 = state.x.iter().zip(&xstar).map(|(a, b)| (a - b) * (a - b)).sum();
        ratios.push(dist / d0);
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let detail = format!(
        "mu {mu:.0e}, alpha {:.4e}, k = {k}; mean |x_k - x*|^2 / |x0 - x*|^2 = {mean:.3e} (bound 2e-6)",
        plan.alpha
    );
    report(6, "end-to-end rate", mean <= 2e-6, &detail, t.elapsed(), Duration::from_secs(60));
}

#[test]
fn criterion_07_importance_sampling_gain() {
    let t = Instant::now();
    let n = 200;
    let data = synth::skewed_least_squares(n, 10, 20.0, 0.1, 7).unwrap();
    let base = Problem::new(data, LossKind::SquaredError, None, Regularizer::Zero)
        .unwrap()
        .with_smooth_ridge(1e-3)
        .unwrap();
    let (xstar, mu) = ridge_optimum(&base);
    let problem = base.with_mu(mu).unwrap();
    let p_star = problem.objective(&xstar);
    let l = problem.row_smoothness().to_vec();
    let run = |sampling: Sampling| -> Vec<f64> {
        let stats = sampling.stats();
        let beta = saga_core::sampling::beta(&sampling, &stats, &BiasCorrector::MarginalInverse).unwrap();
        let plan = planner::stepsize_smooth(mu, &l, problem.lambda(), &stats, &beta).unwrap();
        let saga = Saga::new(&problem, sampling, BiasCorrector::MarginalInverse, plan.alpha).unwrap();
        (0..8).map(|seed| passes_to(&saga, p_star, 1e-6, seed, 20_000.0, 0.25).unwrap_or(f64::INFINITY)).collect()
    };
    let uniform = median(run(Sampling::uniform_serial(n).unwrap()));
    let plan = planner::importance_serial(mu, &l).unwrap();
    let importance = median(run(Sampling::serial(plan.probs).unwrap()));
    let ratio = importance / uniform;
    let detail = format!(
        "median passes to 1e-6: uniform {uniform:.2}, importance {importance:.2}, ratio {ratio:.3} (bound 0.5)"
    );
    report(7, "importance sampling gain", ratio <= 0.5, &detail, t.elapsed(), Duration::from_secs(60));
}

#[test]
fn criterion_08_eso_validity() {
    let t = Instant::now();
    let out = verify::eso_suite_check(&cfg(), 100).unwrap();
    report_check(8, &out, t.elapsed(), Duration::from_secs(60));
}

#[test]
fn criterion_09_mu_free_convergence() {
    let t = Instant::now();
    let data = synth::logistic(100, 10, 10, false, 2.0, 9).unwrap();
    let problem = Problem::new(data, LossKind::Logistic, None, Regularizer::Zero).unwrap();
    let reference = prox_gradient(&problem, &ReferenceOptions::default()).unwrap();
    let p_star = reference.objective;
    let sampling = Sampling::uniform_serial(100).unwrap();
    let EsoParams { v, .. } = planner::eso_serial(problem.data());
    let plan =
        planner::stepsize_growth(None, problem.smoothness(), &v, problem.lambda(), problem.gamma(), &sampling.stats())
            .unwrap();
    let saga = Saga::new(&problem, sampling, BiasCorrector::MarginalInverse, plan.alpha).unwrap();
    let mut state = saga.init(None, JacobianInit::AtX0, 9).unwrap();
    let p0 = problem.objective(&state.x);
    let opts = RunOptions {
        max_passes: 10_000.0,
        record_every: 1.0,
        target: Some(Target::RelativeGap { p_star, eps: 1e-8 / (p0 - p_star) }),
        ..Default::default()
    };
    let trace = saga.run(&mut state, &opts).unwrap();
    let reached = trace.target_reached_at;
    let after5: Vec<f64> = trace.records.iter().filter(|r| r.passes >= 5.0).map(|r| r.objective).collect();
    let rises = after5.windows(2).filter(|w| w[1] > w[0]).count();
    let final_gap = trace.last().map(|r| r.objective - p_star).unwrap_or(f64::NAN);
    let detail = format!(
        "alpha {:.4e}, gap 1e-8 reached at {} passes, final gap {final_gap:.3e}, {rises} increases after pass 5 over {} records",
        plan.alpha,
        reached.map_or("never".into(), |p| format!("{p:.0}")),
        after5.len()
    );
    report(
        9,
        "mu-free composite convergence",
        reached.is_some() && rises == 0,
        &detail,
        t.elapsed(),
        Duration::from_secs(120),
    );
}

#[test]
fn criterion_10_minibatch_sublinearity() {
    let t = Instant::now();
    let n = 2000;
    let data = synth::logistic(n, 22, 13, true, 2.0, 10).unwrap();
    let l2 = 1e-5;
    let problem = Problem::new(data, LossKind::Logistic, None, Regularizer::L2 { l2 }).unwrap();
    let reference =
        prox_gradient(&problem, &ReferenceOptions { step_tol: 1e-14, ..Default::default() }).unwrap();
    let p_star = reference.objective;
    let mut passes = Vec::new();
    for tau in [1, 10, 50] {
        let sampling = Sampling::tau_nice(n, tau).unwrap();
        let eso = planner::eso_tau_nice(problem.data(), tau).unwrap();
        let plan = planner::stepsize_strong(l2, &eso.v, problem.lambda(), problem.gamma(), &sampling.stats()).unwrap();
        let saga = Saga::new(&problem, sampling, BiasCorrector::MarginalInverse, plan.alpha).unwrap();
        let runs: Vec<f64> =
            (0..3).map(|seed| passes_to(&saga, p_star, 1e-6, seed, 5_000.0, 0.05).unwrap_or(f64::INFINITY)).collect();
        passes.push((tau, plan.alpha, median(runs)));
    }
    let growth = passes[2].2 / passes[0].2;
    let listing: Vec<String> =
        passes.iter().map(|(tau, a, p)| format!("tau {tau}: alpha {a:.3e}, {p:.2} passes")).collect();
    let detail = format!("{}; growth 1 -> 50 = {growth:.2}x (bound 8x)", listing.join(", "));
    report(10, "minibatch sublinearity", growth <= 8.0, &detail, t.elapsed(), Duration::from_secs(300));
}
