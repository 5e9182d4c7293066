//! The `plan`, `run` and `validate` subcommands.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use saga_core::model::Normalization;
use saga_core::planner::{self, ImportancePlan};
use saga_core::reference::{prox_gradient, ReferenceOptions};
use saga_core::sampling::{self, SamplingKind};
use saga_core::solver::{Clock, RunOptions, Target, Trace, TraceRecord};
use saga_core::verify::{self, CheckOutcome, SuiteConfig};
use saga_core::{
    synth, BiasCorrector, Dataset, JacobianInit, LossKind, Problem, Regime, Regularizer, Saga, Sampling,
    StepSizePlan,
};

use crate::config::{
    BcrvConfig, DatasetSource, ExplicitSampling, LossConfig, MethodConfig, NormalizationConfig, RegimeConfig,
    RunConfig, SamplingConfig, TraceFormatConfig, VariantConfig,
};
use crate::error::CliError;
use crate::io::{self, TraceFormat};

/// Accuracy at which plans report their predicted iteration count.
pub const PLAN_EPS: f64 = 1e-6;

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

/// Loads or generates the configured dataset. Relative paths resolve
/// against `base`, normally the directory holding the config file.
pub fn build_dataset(config: &RunConfig, base: &Path) -> Result<Dataset, CliError> {
    let ds = config.dataset.as_ref().ok_or_else(|| config_err("dataset: required for this command"))?;
    let logistic = config.problem.loss == LossConfig::Logistic;
    let data = match &ds.source {
        DatasetSource::Libsvm { path, max_rows } => io::read_libsvm_file(&resolve(base, path), logistic, *max_rows)?,
        DatasetSource::SyntheticLogistic { n, d, nnz, signal, seed } => {
            synth::logistic(*n, *d, *nnz, false, *signal, *seed)?
        }
        DatasetSource::SyntheticLeastSquares { n, d, noise, seed } => synth::least_squares(*n, *d, *noise, *seed)?.0,
        DatasetSource::SyntheticSkewed { n, d, outlier_norm, noise, seed } => {
            synth::skewed_least_squares(*n, *d, *outlier_norm, *noise, *seed)?
        }
    };
    let data = match ds.dim {
        Some(d) => data.with_dim(d).map_err(|e| config_err(format!("dataset.dim: {e}")))?,
        None => data,
    };
    Ok(match ds.normalization {
        NormalizationConfig::None => data,
        NormalizationConfig::UnitL2 => data.normalize_rows(Normalization::UnitL2),
    })
}

fn regularizer(config: &RunConfig) -> Result<Regularizer, CliError> {
    let r = &config.problem.regularizer;
    let reg = match (&r.lo, &r.hi) {
        (Some(lo), Some(hi)) => {
            if r.l1 != 0.0 || r.l2 != 0.0 {
                return Err(config_err("problem.regularizer: a box cannot be combined with l1 or l2"));
            }
            Regularizer::Box { lo: lo.clone(), hi: hi.clone() }
        }
        (None, None) => match (r.l1 > 0.0, r.l2 > 0.0) {
            (false, false) => Regularizer::Zero,
            (true, false) => Regularizer::L1 { l1: r.l1 },
            (false, true) => Regularizer::L2 { l2: r.l2 },
            (true, true) => Regularizer::ElasticNet { l1: r.l1, l2: r.l2 },
        },
        _ => return Err(config_err("problem.regularizer: a box needs both lo and hi")),
    };
    if r.l1 < 0.0 || r.l2 < 0.0 {
        return Err(config_err("problem.regularizer: weights must be nonnegative"));
    }
    Ok(reg)
}

pub fn build_problem(config: &RunConfig, data: Dataset) -> Result<Problem, CliError> {
    let loss = match config.problem.loss {
        LossConfig::Logistic => LossKind::Logistic,
        LossConfig::SquaredError => LossKind::SquaredError,
    };
    let reg = regularizer(config)?;
    let mut problem = Problem::new(data, loss, None, reg).map_err(|e| config_err(format!("problem: {e}")))?;
    if config.problem.smooth_ridge != 0.0 {
        problem = problem
            .with_smooth_ridge(config.problem.smooth_ridge)
            .map_err(|e| config_err(format!("problem.smooth_ridge: {e}")))?;
    }
    if let Some(mu) = config.problem.mu {
        problem = problem.with_mu(mu).map_err(|e| config_err(format!("problem.mu: {e}")))?;
    }
    Ok(problem)
}

/// Parses `name` or `name(k)`.
fn directive(text: &str) -> Option<(&str, Option<usize>)> {
    let text = text.trim();
    match text.split_once('(') {
        None => Some((text, None)),
        Some((name, rest)) => {
            let arg = rest.strip_suffix(')')?.trim().parse().ok()?;
            Some((name.trim(), Some(arg)))
        }
    }
}

/// Min, mean and max of a per-index quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Spread {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

impl Spread {
    pub fn of(v: &[f64]) -> Option<Self> {
        if v.is_empty() {
            return None;
        }
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Some(Self { min, mean: v.iter().sum::<f64>() / v.len() as f64, max })
    }
}

impl std::fmt::Display for Spread {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "min {:.6e}  mean {:.6e}  max {:.6e}", self.min, self.mean, self.max)
    }
}

/// What `plan` reports for one variant; also embedded in run sidecars.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanReport {
    pub variant: String,
    pub method: MethodConfig,
    pub sampling: String,
    pub bcrv: BcrvConfig,
    pub regime: Option<Regime>,
    pub alpha: f64,
    /// Set when the step size came from the config rather than the planner.
    pub alpha_overridden: bool,
    pub predicted_iters_at_1e_6: Option<f64>,
    pub p: Option<Spread>,
    pub beta: Option<Spread>,
    pub v: Option<Spread>,
    pub group_smoothness: Option<Spread>,
    pub sigma: Option<Spread>,
    /// Indices (1-based) whose importance probability saturated at one.
    pub saturated: Option<Vec<usize>>,
    pub importance_complexity: Option<f64>,
}

/// A variant ready to run.
pub struct PlannedVariant {
    pub config: VariantConfig,
    pub sampling: Option<Sampling>,
    pub corrector: BiasCorrector,
    pub plan: Option<StepSizePlan>,
    pub alpha: f64,
    pub report: PlanReport,
}

fn sampling_from_config(
    problem: &Problem,
    choice: &SamplingConfig,
    base: &Path,
    field: &str,
) -> Result<(Sampling, String, Option<ImportancePlan>), CliError> {
    let n = problem.n();
    let at = |e: saga_core::Error| config_err(format!("{field}: {e}"));
    let one_based = |i: usize| i.checked_sub(1).ok_or_else(|| config_err(format!("{field}: indices start at 1")));
    Ok(match choice {
        SamplingConfig::Directive(text) => {
            let (name, arg) = directive(text).ok_or_else(|| config_err(format!("{field}: cannot parse {text:?}")))?;
            let mu = || {
                problem.mu().ok_or_else(|| config_err(format!("{field}: {name} needs problem.mu or a strongly convex term")))
            };
            match (name, arg) {
                ("uniform-serial", None) => (Sampling::uniform_serial(n).map_err(at)?, text.clone(), None),
                ("tau-nice", Some(tau)) => (Sampling::tau_nice(n, tau).map_err(at)?, text.clone(), None),
                ("importance-serial", None) => {
                    let plan = planner::importance_serial(mu()?, problem.row_smoothness()).map_err(at)?;
                    (Sampling::serial(plan.probs.clone()).map_err(at)?, text.clone(), Some(plan))
                }
                ("importance-independent", Some(tau)) => {
                    let plan = planner::importance_independent(mu()?, problem.row_smoothness(), problem.lambda(), tau)
                        .map_err(at)?;
                    (Sampling::independent(plan.probs.clone()).map_err(at)?, text.clone(), Some(plan))
                }
                _ => return Err(config_err(format!("{field}: unknown sampling {text:?}"))),
            }
        }
        SamplingConfig::Explicit(explicit) => {
            let sampling = match explicit {
                ExplicitSampling::Serial { probs } => Sampling::serial(probs.clone()),
                ExplicitSampling::TauNice { tau } => Sampling::tau_nice(n, *tau),
                ExplicitSampling::Independent { probs } => Sampling::independent(probs.clone()),
                ExplicitSampling::Partition { groups, probs } => {
                    let groups = groups
                        .iter()
                        .map(|g| g.iter().map(|&i| one_based(i)).collect::<Result<Vec<_>, _>>())
                        .collect::<Result<Vec<_>, _>>()?;
                    Sampling::partition(n, groups, probs.clone())
                }
                ExplicitSampling::Enumerated { file, support } => {
                    let support = match (file, support) {
                        (Some(path), None) => io::read_subsets_file(&resolve(base, path))?,
                        (None, Some(pairs)) => pairs
                            .iter()
                            .map(|(p, s)| Ok((s.iter().map(|&i| one_based(i)).collect::<Result<Vec<_>, _>>()?, *p)))
                            .collect::<Result<Vec<_>, CliError>>()?,
                        _ => return Err(config_err(format!("{field}: give exactly one of file or support"))),
                    };
                    Sampling::enumerated(n, support)
                }
            }
            .map_err(at)?;
            let label = match explicit {
                ExplicitSampling::Serial { .. } => "serial".to_string(),
                ExplicitSampling::TauNice { tau } => format!("tau-nice({tau})"),
                ExplicitSampling::Independent { .. } => "independent".to_string(),
                ExplicitSampling::Partition { .. } => "partition".to_string(),
                ExplicitSampling::Enumerated { .. } => "enumerated".to_string(),
            };
            (sampling, label, None)
        }
    })
}

fn eso_for(problem: &Problem, sampling: &Sampling) -> Result<Vec<f64>, CliError> {
    Ok(match sampling.kind() {
        SamplingKind::Serial { .. } => planner::eso_serial(problem.data()).v,
        SamplingKind::TauNice { tau } => planner::eso_tau_nice(problem.data(), *tau)?.v,
        _ => planner::eso_generic(problem.data(), &sampling.stats()).v,
    })
}

fn choose_regime(problem: &Problem, sampling: &Sampling, requested: RegimeConfig) -> Regime {
    let psi_zero = *problem.regularizer() == Regularizer::Zero;
    match requested {
        RegimeConfig::SmoothStrong => Regime::SmoothStrong,
        RegimeConfig::Growth => Regime::Growth,
        RegimeConfig::GrowthMuFree => Regime::GrowthMuFree,
        RegimeConfig::StrongRegularizer => Regime::StrongRegularizer,
        RegimeConfig::PartitionSmooth => Regime::PartitionSmooth,
        RegimeConfig::Auto => {
            let partition = matches!(sampling.kind(), SamplingKind::Partition { .. });
            if psi_zero && problem.mu().is_some() {
                if partition {
                    Regime::PartitionSmooth
                } else {
                    Regime::SmoothStrong
                }
            } else if problem.regularizer().mu_psi() > 0.0 {
                Regime::StrongRegularizer
            } else if problem.mu().is_some() {
                Regime::Growth
            } else {
                Regime::GrowthMuFree
            }
        }
    }
}

/// Plans one variant: sampling, weights, regime and step size.
pub fn plan_variant(
    problem: &Problem,
    variant: &VariantConfig,
    index: usize,
    base: &Path,
) -> Result<PlannedVariant, CliError> {
    let field = format!("variants[{index}]");
    let corrector = match variant.bcrv {
        BcrvConfig::MarginalInverse => BiasCorrector::MarginalInverse,
        BcrvConfig::SizeOptimal => BiasCorrector::SizeOptimal,
    };
    let mut report = PlanReport {
        variant: variant.name.clone(),
        method: variant.method,
        sampling: String::new(),
        bcrv: variant.bcrv,
        regime: None,
        alpha: 0.0,
        alpha_overridden: variant.alpha.is_some(),
        predicted_iters_at_1e_6: None,
        p: None,
        beta: None,
        v: None,
        group_smoothness: None,
        sigma: None,
        saturated: None,
        importance_complexity: None,
    };
    if variant.method == MethodConfig::ProxGradient {
        let alpha = match variant.alpha {
            Some(a) => a,
            None => 1.0 / (3.0 * problem.smoothness()),
        };
        report.sampling = "full batch".into();
        report.alpha = alpha;
        return Ok(PlannedVariant { config: variant.clone(), sampling: None, corrector, plan: None, alpha, report });
    }

    let (sampling, label, importance) =
        sampling_from_config(problem, &variant.sampling, base, &format!("{field}.sampling"))?;
    let stats = sampling.stats();
    report.sampling = label;
    report.p = Spread::of(&stats.p);
    if let Some(imp) = &importance {
        report.saturated = Some(imp.saturated.iter().map(|i| i + 1).collect());
        report.importance_complexity = Some(imp.complexity);
    }
    let regime = choose_regime(problem, &sampling, variant.regime);
    report.regime = Some(regime);
    let psi_zero = *problem.regularizer() == Regularizer::Zero;
    let need_mu = |what: &str| {
        problem.mu().ok_or_else(|| config_err(format!("problem.mu: the {what} regime needs a strong convexity constant")))
    };
    let linear_only = |what: &str| -> Result<(), CliError> {
        if variant.bcrv != BcrvConfig::MarginalInverse {
            return Err(config_err(format!("{field}.bcrv: the {what} regime requires marginal_inverse weights")));
        }
        if problem.smooth_ridge() != 0.0 {
            return Err(config_err(format!("problem.smooth_ridge: the {what} regime needs plain linear-model losses")));
        }
        Ok(())
    };
    let plan = match regime {
        Regime::SmoothStrong => {
            if !psi_zero {
                return Err(config_err(format!(
                    "{field}.regime: smooth_strong needs no regularizer; fold a ridge into problem.smooth_ridge"
                )));
            }
            let mu = need_mu("smooth_strong")?;
            let beta = sampling::beta(&sampling, &stats, &corrector)?;
            report.beta = Spread::of(&beta);
            planner::stepsize_smooth(mu, problem.row_smoothness(), problem.lambda(), &stats, &beta)?
        }
        Regime::PartitionSmooth => {
            let SamplingKind::Partition { groups, probs } = sampling.kind() else {
                return Err(config_err(format!("{field}.regime: partition_smooth needs a partition sampling")));
            };
            if !psi_zero {
                return Err(config_err(format!("{field}.regime: partition_smooth needs no regularizer")));
            }
            if variant.bcrv != BcrvConfig::MarginalInverse {
                return Err(config_err(format!("{field}.bcrv: partition_smooth uses marginal_inverse weights")));
            }
            let mu = need_mu("partition_smooth")?;
            let l_c = problem.group_smoothness(groups);
            let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
            report.group_smoothness = Spread::of(&l_c);
            planner::stepsize_partition(mu, &l_c, &sizes, probs, problem.n())?
        }
        Regime::Growth | Regime::GrowthMuFree => {
            linear_only("growth")?;
            let mu = if regime == Regime::Growth { Some(need_mu("growth")?) } else { None };
            let v = eso_for(problem, &sampling)?;
            report.v = Spread::of(&v);
            planner::stepsize_growth(mu, problem.smoothness(), &v, problem.lambda(), problem.gamma(), &stats)?
        }
        Regime::StrongRegularizer => {
            linear_only("strong_regularizer")?;
            let mu = problem.regularizer().mu_psi();
            if !(mu > 0.0) {
                return Err(config_err(format!(
                    "{field}.regime: strong_regularizer needs problem.regularizer.l2 > 0"
                )));
            }
            let v = eso_for(problem, &sampling)?;
            report.v = Spread::of(&v);
            planner::stepsize_strong(mu, &v, problem.lambda(), problem.gamma(), &stats)?
        }
    };
    report.sigma = Spread::of(&plan.sigma);
    report.predicted_iters_at_1e_6 = plan.predicted_iters(PLAN_EPS);
    let alpha = variant.alpha.unwrap_or(plan.alpha);
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(config_err(format!("{field}.alpha: must be positive and finite")));
    }
    report.alpha = alpha;
    Ok(PlannedVariant { config: variant.clone(), sampling: Some(sampling), corrector, plan: Some(plan), alpha, report })
}

fn plan_all(config: &RunConfig, problem: &Problem, base: &Path) -> Result<Vec<PlannedVariant>, CliError> {
    if config.variants.is_empty() {
        return Err(config_err("variants: at least one variant is required"));
    }
    let mut names = std::collections::BTreeSet::new();
    for (k, v) in config.variants.iter().enumerate() {
        if v.name.is_empty() || v.name.contains(['/', '\\']) || !names.insert(v.name.as_str()) {
            return Err(config_err(format!("variants[{k}].name: must be unique, nonempty and path-safe")));
        }
    }
    config.variants.iter().enumerate().map(|(k, v)| plan_variant(problem, v, k, base)).collect()
}

fn format_report(r: &PlanReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "variant {}: {} sampling, {:?} weights", r.variant, r.sampling, r.bcrv);
    if let Some(regime) = r.regime {
        let _ = writeln!(s, "  regime      {regime:?}");
    }
    let rows = [("p_i", r.p), ("beta_i", r.beta), ("v_i", r.v), ("L_C", r.group_smoothness), ("sigma_i", r.sigma)];
    for (name, spread) in rows {
        if let Some(sp) = spread {
            let _ = writeln!(s, "  {name:<11} {sp}");
        }
    }
    let source = if r.alpha_overridden { " (from config)" } else { "" };
    let _ = writeln!(s, "  alpha       {:.6e}{source}", r.alpha);
    if let Some(k) = r.predicted_iters_at_1e_6 {
        let _ = writeln!(s, "  predicted iterations to 1e-6: {k:.0}");
    }
    if let Some(t) = &r.saturated {
        let _ = writeln!(s, "  saturated set T ({} indices): {t:?}", t.len());
    }
    if let Some(c) = r.importance_complexity {
        let _ = writeln!(s, "  importance complexity bound: {c:.6e}");
    }
    s
}

/// `plan`: prints each variant's plan and writes `plan.json`.
pub fn cmd_plan(config: &RunConfig, base: &Path) -> Result<String, CliError> {
    let problem = build_problem(config, build_dataset(config, base)?)?;
    let planned = plan_all(config, &problem, base)?;
    let mut out = format!(
        "problem: n = {}, d = {}, L = {:.6e}, mu = {}\n",
        problem.n(),
        problem.d(),
        problem.smoothness(),
        problem.mu().map_or("unknown".into(), |m| format!("{m:.6e}"))
    );
    for p in &planned {
        out.push_str(&format_report(&p.report));
    }
    let reports: Vec<&PlanReport> = planned.iter().map(|p| &p.report).collect();
    let path = config.output_dir().join("plan.json");
    io::write_json(&path, &reports)?;
    let _ = writeln!(out, "wrote {}", path.display());
    Ok(out)
}

struct WallClock(Instant);

impl Clock for WallClock {
    fn elapsed_ms(&self) -> f64 {
        self.0.elapsed().as_secs_f64() * 1e3
    }
}

/// Per-run metadata written next to each trace.
#[derive(Serialize)]
struct Sidecar<'a> {
    variant: &'a str,
    seed: u64,
    alpha: f64,
    plan: &'a PlanReport,
    p_star: Option<f64>,
    passes_to_eps: Option<f64>,
    final_objective: Option<f64>,
    config: &'a RunConfig,
}

/// One finished (variant, seed) run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub variant: String,
    pub seed: u64,
    pub alpha: f64,
    pub passes_to_eps: Option<f64>,
    pub final_objective: Option<f64>,
    pub passes: f64,
}

fn run_prox_gradient(
    problem: &Problem,
    alpha: f64,
    config: &RunConfig,
    p_star: Option<f64>,
    x_star: Option<&[f64]>,
    clock: Option<&dyn Clock>,
) -> Result<Trace, CliError> {
    let stop = &config.stopping;
    let cadence = stop.record_every.max(1.0).round() as u64;
    let mut budget = stop.max_passes.floor() as u64;
    if let Some(m) = stop.max_iters {
        budget = budget.min(m);
    }
    let mut x = vec![0.0; problem.d()];
    let record = |k: u64, x: &[f64]| TraceRecord {
        k,
        passes: k as f64,
        objective: problem.objective(x),
        dist_sq: x_star.map(|s| s.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum()),
        lyapunov: None,
        wall_ms: clock.map(|c| c.elapsed_ms()),
    };
    let mut trace = Trace::default();
    let first = record(0, &x);
    let target = match (stop.eps, p_star) {
        (Some(eps), Some(ps)) => Some((ps, eps * (first.objective - ps))),
        _ => None,
    };
    let met = |rec: &TraceRecord| target.is_some_and(|(ps, tol)| rec.objective - ps <= tol);
    if met(&first) {
        trace.target_reached_at = Some(0.0);
    }
    trace.records.push(first);
    let mut k = 0;
    while k < budget && trace.target_reached_at.is_none() {
        let opts = ReferenceOptions { alpha: Some(alpha), max_iters: 1, step_tol: 0.0, x0: Some(x) };
        x = prox_gradient(problem, &opts)?.x;
        k += 1;
        if k % cadence == 0 || k == budget {
            let rec = record(k, &x);
            if met(&rec) {
                trace.target_reached_at = Some(k as f64);
            }
            trace.records.push(rec);
        }
    }
    Ok(trace)
}

fn run_one(
    config: &RunConfig,
    problem: &Problem,
    variant: &PlannedVariant,
    seed: u64,
    p_star: Option<f64>,
    x_star: Option<&[f64]>,
    out_dir: &Path,
) -> Result<RunOutcome, CliError> {
    let stop = &config.stopping;
    let wall = WallClock(Instant::now());
    let clock: Option<&dyn Clock> = if stop.wall_time { Some(&wall) } else { None };
    let trace = match &variant.sampling {
        None => run_prox_gradient(problem, variant.alpha, config, p_star, x_star, clock)?,
        Some(sampling) => {
            let saga = Saga::new(problem, sampling.clone(), variant.corrector.clone(), variant.alpha)?;
            let mut state = saga.init(None, JacobianInit::AtX0, seed)?;
            let opts = RunOptions {
                max_passes: stop.max_passes,
                max_iters: stop.max_iters,
                record_every: stop.record_every,
                target: match (stop.eps, p_star) {
                    (Some(eps), Some(p_star)) => Some(Target::RelativeGap { p_star, eps }),
                    _ => None,
                },
                reference: x_star,
                lyapunov: None,
                clock,
            };
            saga.run(&mut state, &opts)?
        }
    };
    let name = &variant.config.name;
    let stem = out_dir.join(name).join(format!("seed{seed}"));
    let formats: &[TraceFormat] = match config.output.format {
        TraceFormatConfig::Csv => &[TraceFormat::Csv],
        TraceFormatConfig::Json => &[TraceFormat::Json],
        TraceFormatConfig::Both => &[TraceFormat::Csv, TraceFormat::Json],
    };
    for &f in formats {
        let ext = if f == TraceFormat::Csv { "csv" } else { "json" };
        io::write_trace(&trace, &stem.with_extension(ext), f)?;
    }
    let last = trace.last();
    let outcome = RunOutcome {
        variant: name.clone(),
        seed,
        alpha: variant.alpha,
        passes_to_eps: trace.target_reached_at,
        final_objective: last.map(|r| r.objective),
        passes: last.map_or(0.0, |r| r.passes),
    };
    let sidecar = Sidecar {
        variant: name,
        seed,
        alpha: variant.alpha,
        plan: &variant.report,
        p_star,
        passes_to_eps: outcome.passes_to_eps,
        final_objective: outcome.final_objective,
        config,
    };
    io::write_json(&stem.with_extension("meta.json"), &sidecar)?;
    Ok(outcome)
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// `run`: every (variant, seed) pair on a worker pool, one trace each, and
/// a summary of passes to the target gap per variant.
pub fn cmd_run(config: &RunConfig, base: &Path) -> Result<String, CliError> {
    if config.seeds.is_empty() {
        return Err(config_err("seeds: at least one seed is required"));
    }
    if config.stopping.eps.is_some() && !config.reference.enabled {
        return Err(config_err("stopping.eps: needs reference.enabled for the optimal value"));
    }
    let problem = build_problem(config, build_dataset(config, base)?)?;
    let planned = plan_all(config, &problem, base)?;
    let reference = if config.reference.enabled {
        let opts = ReferenceOptions {
            max_iters: config.reference.max_iters,
            step_tol: config.reference.step_tol,
            ..Default::default()
        };
        Some(prox_gradient(&problem, &opts)?)
    } else {
        None
    };
    let p_star = reference.as_ref().map(|r| r.objective);
    let x_star = reference.as_ref().map(|r| r.x.as_slice());
    let out_dir = config.output_dir();
    let jobs: Vec<(usize, u64)> =
        (0..planned.len()).flat_map(|v| config.seeds.iter().map(move |&s| (v, s))).collect();
    let outcomes: Vec<RunOutcome> = jobs
        .par_iter()
        .map(|&(v, seed)| run_one(config, &problem, &planned[v], seed, p_star, x_star, &out_dir))
        .collect::<Result<_, _>>()?;

    let mut table = String::from("variant,seeds,alpha,median_passes_to_eps,reached,median_final_gap\n");
    let mut out = String::new();
    if let Some(r) = &reference {
        let _ = writeln!(out, "reference: P* = {:.12e} after {} iterations", r.objective, r.iters);
    }
    let _ = writeln!(out, "{:<20} {:>6} {:>14} {:>16} {:>8}", "variant", "seeds", "alpha", "passes to eps", "reached");
    for p in &planned {
        let mine: Vec<&RunOutcome> = outcomes.iter().filter(|o| o.variant == p.config.name).collect();
        let reached: Vec<f64> = mine.iter().filter_map(|o| o.passes_to_eps).collect();
        let all_reached = reached.len() == mine.len();
        let passes = if all_reached { median(reached.clone()) } else { None };
        let gap = p_star.and_then(|ps| median(mine.iter().filter_map(|o| o.final_objective.map(|f| f - ps)).collect()));
        let cell = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let _ = writeln!(
            table,
            "{},{},{},{},{},{}",
            p.config.name,
            mine.len(),
            p.alpha,
            cell(passes),
            reached.len(),
            cell(gap)
        );
        let _ = writeln!(
            out,
            "{:<20} {:>6} {:>14.6e} {:>16} {:>8}",
            p.config.name,
            mine.len(),
            p.alpha,
            passes.map_or("-".into(), |x| format!("{x:.2}")),
            format!("{}/{}", reached.len(), mine.len())
        );
    }
    let path = out_dir.join("summary.csv");
    io::write_text(&path, &table)?;
    let _ = writeln!(out, "wrote {} traces and {}", outcomes.len(), path.display());
    Ok(out)
}

/// One timed validation check.
#[derive(Debug, Clone, Serialize)]
pub struct TimedCheck {
    pub name: String,
    pub passed: bool,
    pub metric: f64,
    pub tolerance: f64,
    pub max_ratio: Option<f64>,
    pub cases: usize,
    pub detail: String,
    pub seconds: f64,
}

/// Runs the stock suite, timing each check.
pub fn run_validation(config: &RunConfig) -> Result<Vec<TimedCheck>, CliError> {
    let v = &config.validate;
    let cfg = SuiteConfig { seed: v.seed, states: v.states, beta_scale: v.beta_scale };
    type Check = fn(&SuiteConfig) -> saga_core::Result<CheckOutcome>;
    let checks: [Check; 7] = [
        |c| verify::unbiasedness_check(c, 100),
        |c| verify::sampling_stats_check(c, 200),
        |c| verify::eso_suite_check(c, 100),
        |c| verify::smooth_contraction_check(c, 4),
        |c| verify::strong_contraction_check(c, 3),
        |c| verify::growth_contraction_check(c, 3),
        |c| verify::partition_contraction_check(c, 2),
    ];
    checks
        .par_iter()
        .map(|check| {
            let t = Instant::now();
            let o = check(&cfg).map_err(|e| CliError::Numeric(e.to_string()))?;
            Ok(TimedCheck {
                name: o.name,
                passed: o.passed,
                metric: o.metric,
                tolerance: o.tolerance,
                max_ratio: o.max_ratio,
                cases: o.cases,
                detail: o.detail,
                seconds: t.elapsed().as_secs_f64(),
            })
        })
        .collect()
}

/// Outcome of `validate`: the printable report and the failed check names.
pub struct ValidationReport {
    pub text: String,
    pub failed: Vec<String>,
}

/// `validate`: one line per check, plus `validate.json`.
pub fn cmd_validate(config: &RunConfig) -> Result<ValidationReport, CliError> {
    let checks = run_validation(config)?;
    let mut text = String::new();
    for c in &checks {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        let ratio = c.max_ratio.map_or(String::new(), |r| format!(", max ratio {r:.9}"));
        let _ = writeln!(
            text,
            "{verdict} {:<42} metric {:>11.3e} (tol {:.0e}){ratio}, {} cases, {:.2}s",
            c.name, c.metric, c.tolerance, c.cases, c.seconds
        );
    }
    let path = config.output_dir().join("validate.json");
    io::write_json(&path, &checks)?;
    let failed = checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
    Ok(ValidationReport { text, failed })
}
