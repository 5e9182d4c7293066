//! Step-size planning: ESO constants, the step sizes that guarantee linear
//! convergence in each regime, the matching iteration-complexity bounds, and
//! importance-sampling probabilities that minimize those bounds.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::math::ln;
use crate::model::Dataset;
use crate::sampling::{Sampling, SamplingStats};

/// Expected separable overapproximation constants: for all `h`,
/// `E |sum_{i in S} a_i h_i|^2 <= sum_i p_i v_i h_i^2`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EsoParams {
    pub v: Vec<f64>,
    /// Per-feature count of rows with a nonzero entry, when used.
    pub omega: Option<Vec<usize>>,
}

impl EsoParams {
    /// Indices whose row is zero; they never move the iterate.
    pub fn inert(&self) -> Vec<usize> {
        self.v.iter().enumerate().filter(|(_, v)| **v <= 0.0).map(|(i, _)| i).collect()
    }
}

/// ESO constants for serial samplings: `v_i = |a_i|^2`.
pub fn eso_serial(data: &Dataset) -> EsoParams {
    EsoParams { v: (0..data.n()).map(|i| data.row(i).norm_sq()).collect(), omega: None }
}

/// ESO constants for tau-nice samplings, exploiting feature sparsity:
/// `v_i = sum_j (1 + (omega_j - 1)(tau - 1)/(n - 1)) a_ij^2`.
pub fn eso_tau_nice(data: &Dataset, tau: usize) -> Result<EsoParams> {
    let n = data.n();
    if tau == 0 || tau > n {
        return Err(Error::BadTau { tau, n });
    }
    if tau == 1 {
        return Ok(eso_serial(data));
    }
    let omega = data.column_counts();
    let scale = (tau - 1) as f64 / (n - 1) as f64;
    let weight: Vec<f64> = omega.iter().map(|&w| 1.0 + (w as f64 - 1.0) * scale).collect();
    let v = (0..n)
        .map(|i| {
            let row = data.row(i);
            row.indices.iter().zip(row.values).map(|(&j, a)| weight[j] * a * a).sum()
        })
        .collect();
    Ok(EsoParams { v, omega: Some(omega) })
}

/// ESO constants valid for any sampling, from Cauchy-Schwarz:
/// `v_i = E[|S| | i in S] |a_i|^2`.
pub fn eso_generic(data: &Dataset, stats: &SamplingStats) -> EsoParams {
    EsoParams {
        v: (0..data.n()).map(|i| stats.cond_size[i] * data.row(i).norm_sq()).collect(),
        omega: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EsoCheckMode {
    /// Exact expectation over the enumerated support.
    Exhaustive,
    /// Empirical expectation over this many draws.
    MonteCarlo { trials: usize },
}

/// Number of random directions `h` tried by [`eso_check`].
pub const ESO_CHECK_DRAWS: usize = 50;

/// Largest observed ratio `E|sum_{i in S} a_i h_i|^2 / sum_i p_i v_i h_i^2`
/// over random directions (half Gaussian, half Cauchy). Values above one
/// witness a violated ESO.
pub fn eso_check(
    data: &Dataset,
    sampling: &Sampling,
    v: &[f64],
    mode: EsoCheckMode,
    seed: u64,
) -> Result<f64> {
    let n = data.n();
    if v.len() != n || sampling.n() != n {
        return Err(Error::DimensionMismatch { what: "ESO constants", expected: n, got: v.len() });
    }
    let stats = sampling.stats();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let subsets: Vec<(Vec<usize>, f64)> = match mode {
        EsoCheckMode::Exhaustive => sampling.support()?,
        EsoCheckMode::MonteCarlo { trials } => {
            let mut sampler = sampling.sampler();
            let w = 1.0 / trials.max(1) as f64;
            (0..trials)
                .map(|_| {
                    let mut s = Vec::new();
                    sampler.draw_into(&mut rng, &mut s);
                    (s, w)
                })
                .collect()
        }
    };
    let cauchy = Cauchy::new(0.0, 1.0).expect("unit scale");
    let mut worst = 0.0f64;
    let mut acc = vec![0.0; data.d()];
    for draw in 0..ESO_CHECK_DRAWS {
        let h: Vec<f64> = (0..n)
            .map(|_| if draw % 2 == 0 { StandardNormal.sample(&mut rng) } else { cauchy.sample(&mut rng) })
            .collect();
        let rhs: f64 = (0..n).map(|i| stats.p[i] * v[i] * h[i] * h[i]).sum();
        let mut lhs = 0.0;
        for (subset, prob) in &subsets {
            acc.iter_mut().for_each(|a| *a = 0.0);
            for &i in subset {
                data.row(i).axpy(h[i], &mut acc);
            }
            lhs += prob * crate::math::norm_sq(&acc);
        }
        if rhs > 0.0 {
            worst = worst.max(lhs / rhs);
        } else if lhs > 0.0 {
            return Ok(f64::INFINITY);
        }
    }
    Ok(worst)
}

/// Which convergence result a plan instantiates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Regime {
    /// Smooth strongly convex `f`, no regularizer; constants `L_i`, `beta_i`.
    SmoothStrong,
    /// Linear models with quadratic functional growth; constants `v_i`.
    Growth,
    /// As `Growth` but with the step size that needs no growth constant.
    GrowthMuFree,
    /// Linear models with a strongly convex regularizer.
    StrongRegularizer,
    /// Partition sampling on a smooth strongly convex `f`; `sigma` is per group.
    PartitionSmooth,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepSizePlan {
    pub alpha: f64,
    pub regime: Regime,
    /// Lyapunov weights; per index, or per group for `PartitionSmooth`.
    pub sigma: Vec<f64>,
    /// Iterations per factor `e` of accuracy; `None` when the rate constant
    /// is unknown.
    pub complexity: Option<f64>,
}

impl StepSizePlan {
    /// Iterations sufficient for expected accuracy `eps` (relative).
    pub fn predicted_iters(&self, eps: f64) -> Option<f64> {
        self.complexity.map(|c| c * ln(1.0 / eps))
    }
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if !(value > 0.0) || !value.is_finite() {
        return Err(Error::NonPositiveInput { name, value });
    }
    Ok(())
}

fn all_positive(name: &'static str, values: &[f64]) -> Result<()> {
    values.iter().try_for_each(|&v| positive(name, v))
}

fn nonnegative(name: &'static str, values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
        Some(&value) => Err(Error::NonPositiveInput { name, value }),
        None => Ok(()),
    }
}

fn same_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { what, expected, got });
    }
    Ok(())
}

fn min_over(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(f64::INFINITY, f64::min)
}

fn max_over(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(f64::NEG_INFINITY, f64::max)
}

/// Smooth strongly convex case:
/// `alpha = min_i p_i / (mu + 4 L_i beta_i lambda_i p_i)`,
/// `sigma_i = 1/(4 L_i beta_i p_i lambda_i)`, complexity
/// `max_i (1/p_i + 4 L_i beta_i lambda_i / mu)`.
pub fn stepsize_smooth(
    mu: f64,
    l: &[f64],
    lambda: &[f64],
    stats: &SamplingStats,
    beta: &[f64],
) -> Result<StepSizePlan> {
    let n = l.len();
    positive("mu", mu)?;
    all_positive("L_i", l)?;
    all_positive("lambda", lambda)?;
    all_positive("beta", beta)?;
    same_len("weights", n, lambda.len())?;
    same_len("beta", n, beta.len())?;
    same_len("marginals", n, stats.p.len())?;
    let p = &stats.p;
    let alpha = min_over((0..n).map(|i| p[i] / (mu + 4.0 * l[i] * beta[i] * lambda[i] * p[i])));
    let sigma = (0..n).map(|i| 1.0 / (4.0 * l[i] * beta[i] * p[i] * lambda[i])).collect();
    let complexity = max_over((0..n).map(|i| 1.0 / p[i] + 4.0 * l[i] * beta[i] * lambda[i] / mu));
    Ok(StepSizePlan { alpha, regime: Regime::SmoothStrong, sigma, complexity: Some(complexity) })
}

/// Growth-condition case for linear models.
///
/// With a growth constant:
/// `alpha = min{(2/3) min_i p_i/(mu + 4 v_i lambda_i/gamma), 1/(3L)}` and
/// complexity `2 + max{6L/mu, 3 max_i (1/p_i + 4 v_i lambda_i/(p_i mu gamma))}`.
/// Without one:
/// `alpha = min{(1/12) min_i p_i gamma/(v_i lambda_i), 1/(3L)}`.
/// In both cases `sigma_i = gamma/(2 v_i lambda_i)` (zero for inert rows).
pub fn stepsize_growth(
    mu: Option<f64>,
    l_total: f64,
    v: &[f64],
    lambda: &[f64],
    gamma: f64,
    stats: &SamplingStats,
) -> Result<StepSizePlan> {
    let n = v.len();
    positive("L", l_total)?;
    positive("gamma", gamma)?;
    nonnegative("v_i", v)?;
    all_positive("lambda", lambda)?;
    same_len("weights", n, lambda.len())?;
    same_len("marginals", n, stats.p.len())?;
    let p = &stats.p;
    let sigma = sigma_growth(v, lambda, gamma);
    let cap = 1.0 / (3.0 * l_total);
    match mu {
        Some(mu) => {
            positive("mu", mu)?;
            let bound = min_over((0..n).map(|i| 2.0 / 3.0 * p[i] / (mu + 4.0 * v[i] * lambda[i] / gamma)));
            let alpha = bound.min(cap);
            let inner = max_over(
                (0..n).map(|i| 1.0 / p[i] + 4.0 * v[i] * lambda[i] / (p[i] * mu * gamma)),
            );
            let complexity = 2.0 + (6.0 * l_total / mu).max(3.0 * inner);
            Ok(StepSizePlan { alpha, regime: Regime::Growth, sigma, complexity: Some(complexity) })
        }
        None => {
            let bound = min_over(
                (0..n).filter(|&i| v[i] > 0.0).map(|i| p[i] * gamma / (12.0 * v[i] * lambda[i])),
            );
            let alpha = bound.min(cap);
            Ok(StepSizePlan { alpha, regime: Regime::GrowthMuFree, sigma, complexity: None })
        }
    }
}

fn sigma_growth(v: &[f64], lambda: &[f64], gamma: f64) -> Vec<f64> {
    v.iter()
        .zip(lambda)
        .map(|(&vi, &li)| if vi > 0.0 { gamma / (2.0 * vi * li) } else { 0.0 })
        .collect()
}

/// Strongly convex regularizer case for linear models:
/// `alpha = min_i p_i/(mu + 3 v_i lambda_i/gamma)`,
/// `sigma_i = 2 gamma/(3 v_i lambda_i)`, complexity
/// `max_i (1 + 1/p_i + 3 v_i lambda_i/(p_i mu gamma))`.
pub fn stepsize_strong(
    mu: f64,
    v: &[f64],
    lambda: &[f64],
    gamma: f64,
    stats: &SamplingStats,
) -> Result<StepSizePlan> {
    let n = v.len();
    positive("mu", mu)?;
    positive("gamma", gamma)?;
    nonnegative("v_i", v)?;
    all_positive("lambda", lambda)?;
    same_len("weights", n, lambda.len())?;
    same_len("marginals", n, stats.p.len())?;
    let p = &stats.p;
    let alpha = min_over((0..n).map(|i| p[i] / (mu + 3.0 * v[i] * lambda[i] / gamma)));
    let sigma = v
        .iter()
        .zip(lambda)
        .map(|(&vi, &li)| if vi > 0.0 { 2.0 * gamma / (3.0 * vi * li) } else { 0.0 })
        .collect();
    let complexity =
        max_over((0..n).map(|i| 1.0 + 1.0 / p[i] + 3.0 * v[i] * lambda[i] / (p[i] * mu * gamma)));
    Ok(StepSizePlan { alpha, regime: Regime::StrongRegularizer, sigma, complexity: Some(complexity) })
}

/// Partition sampling with uniform weights `1/n` on a smooth strongly convex
/// `f`: `alpha = min_C p_C/(mu + 4 L_C |C|/n)`, `sigma_C = n/(4 L_C |C|)`,
/// complexity `max_C (1/p_C + 4 L_C |C|/(mu n p_C))`. `L_C` is the smoothness
/// of the group average `(1/|C|) sum_{i in C} f_i`.
pub fn stepsize_partition(
    mu: f64,
    group_smoothness: &[f64],
    sizes: &[usize],
    group_probs: &[f64],
    n: usize,
) -> Result<StepSizePlan> {
    positive("mu", mu)?;
    all_positive("L_C", group_smoothness)?;
    all_positive("p_C", group_probs)?;
    same_len("group sizes", group_smoothness.len(), sizes.len())?;
    same_len("group probabilities", group_smoothness.len(), group_probs.len())?;
    let nf = n as f64;
    let g = sizes.len();
    let load = |c: usize| group_smoothness[c] * sizes[c] as f64;
    let alpha = min_over((0..g).map(|c| group_probs[c] / (mu + 4.0 * load(c) / nf)));
    let sigma = (0..g).map(|c| nf / (4.0 * load(c))).collect();
    let complexity = max_over(
        (0..g).map(|c| 1.0 / group_probs[c] + 4.0 * load(c) / (mu * nf * group_probs[c])),
    );
    Ok(StepSizePlan { alpha, regime: Regime::PartitionSmooth, sigma, complexity: Some(complexity) })
}

/// Probabilities with their complexity bound (iterations per factor `e`).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ImportancePlan {
    pub probs: Vec<f64>,
    pub complexity: f64,
    /// Indices forced to probability one (independent samplings only).
    pub saturated: Vec<usize>,
}

/// Optimal serial probabilities `p_i ∝ mu n + 4 L_i`; complexity
/// `n + 4 sum_i L_i/(mu n)`.
pub fn importance_serial(mu: f64, l: &[f64]) -> Result<ImportancePlan> {
    let sizes = vec![1; l.len()];
    importance_partition(mu, l, &sizes, l.len())
}

/// Optimal group probabilities `p_C ∝ mu n + 4 L_C |C|`; complexity
/// `|groups| + 4 sum_C L_C |C|/(mu n)`.
pub fn importance_partition(
    mu: f64,
    group_smoothness: &[f64],
    sizes: &[usize],
    n: usize,
) -> Result<ImportancePlan> {
    positive("mu", mu)?;
    all_positive("L_C", group_smoothness)?;
    same_len("group sizes", group_smoothness.len(), sizes.len())?;
    if sizes.iter().sum::<usize>() != n || sizes.contains(&0) {
        return Err(Error::BadPartition { reason: "group sizes do not add up to n" });
    }
    let nf = n as f64;
    let scores: Vec<f64> =
        group_smoothness.iter().zip(sizes).map(|(l, &s)| mu * nf + 4.0 * l * s as f64).collect();
    let total: f64 = scores.iter().sum();
    let load: f64 = group_smoothness.iter().zip(sizes).map(|(l, &s)| l * s as f64).sum();
    Ok(ImportancePlan {
        probs: scores.iter().map(|s| s / total).collect(),
        complexity: sizes.len() as f64 + 4.0 * load / (mu * nf),
        saturated: Vec::new(),
    })
}

/// Independent-sampling probabilities with expected size `tau` from scores
/// `s_i = mu + 4 L_i lambda_i (tau + 1)`: `q_i = tau s_i / sum_j s_j`, and
/// indices with `q_i > 1` are fixed at one while the remaining mass is
/// redistributed proportionally, repeated until feasible. The reported
/// complexity is `max_i s_i/(mu p_i)`, which bounds the smooth-case rate for
/// marginal-inverse weights.
pub fn importance_independent(mu: f64, l: &[f64], lambda: &[f64], tau: usize) -> Result<ImportancePlan> {
    let n = l.len();
    if tau == 0 || tau > n {
        return Err(Error::BadTau { tau, n });
    }
    positive("mu", mu)?;
    all_positive("L_i", l)?;
    all_positive("lambda", lambda)?;
    same_len("weights", n, lambda.len())?;
    let t = tau as f64;
    let scores: Vec<f64> = (0..n).map(|i| mu + 4.0 * l[i] * lambda[i] * (t + 1.0)).collect();
    let mut probs = vec![0.0; n];
    let mut fixed = vec![false; n];
    loop {
        let fixed_count = fixed.iter().filter(|f| **f).count();
        let mass = t - fixed_count as f64;
        let free_score: f64 = (0..n).filter(|&i| !fixed[i]).map(|i| scores[i]).sum();
        let mut changed = false;
        for i in 0..n {
            if fixed[i] {
                probs[i] = 1.0;
                continue;
            }
            probs[i] = mass * scores[i] / free_score;
            if probs[i] > 1.0 {
                fixed[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    // every free index is strictly below one here, so clamping only touches rounding
    probs.iter_mut().for_each(|p| *p = p.min(1.0));
    let complexity = max_over((0..n).map(|i| scores[i] / (mu * probs[i])));
    Ok(ImportancePlan {
        probs,
        complexity,
        saturated: (0..n).filter(|&i| fixed[i]).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{beta, BiasCorrector};
    use proptest::prelude::*;

    fn dense(d: usize, m: &[f64]) -> Dataset {
        Dataset::from_dense(d, m, vec![0.0; m.len() / d]).unwrap()
    }

    #[test]
    fn eso_serial_examples() {
        assert_eq!(eso_serial(&dense(2, &[3.0, 4.0])).v, vec![25.0]);
        assert_eq!(eso_serial(&dense(3, &[0.0, 1.0, 0.0])).v, vec![1.0]);
        let vals = [0.3, -1.2, 2.5, 0.0, -0.7];
        let v = eso_serial(&dense(1, &vals)).v;
        for (vi, a) in v.iter().zip(vals) {
            assert_eq!(*vi, a * a);
        }
    }

    #[test]
    fn eso_tau_nice_examples() {
        let data = dense(2, &[1.0, 0.0, 1.0, 1.0]);
        let eso = eso_tau_nice(&data, 2).unwrap();
        assert_eq!(eso.omega, Some(vec![2, 1]));
        assert_eq!(eso.v, vec![2.0, 3.0]);
        let s = Sampling::tau_nice(2, 2).unwrap();
        let ratio = eso_check(&data, &s, &eso.v, EsoCheckMode::Exhaustive, 3).unwrap();
        assert!(ratio <= 1.0 + 1e-10);

        let dense_data = dense(2, &[1.0, 2.0, -1.0, 0.5, 3.0, 1.0]);
        let eso = eso_tau_nice(&dense_data, 2).unwrap();
        for i in 0..3 {
            assert!((eso.v[i] - 2.0 * dense_data.row(i).norm_sq()).abs() < 1e-14);
        }
        assert_eq!(eso_tau_nice(&dense_data, 1).unwrap(), eso_serial(&dense_data));
        assert!(matches!(eso_tau_nice(&dense_data, 4), Err(Error::BadTau { .. })));
    }

    #[test]
    fn eso_check_examples() {
        let data = dense(3, &[1.0, 0.0, 2.0, -1.0, 1.0, 0.0, 0.5, 0.5, 0.5]);
        let s = Sampling::uniform_serial(3).unwrap();
        let v = eso_serial(&data).v;
        let r = eso_check(&data, &s, &v, EsoCheckMode::Exhaustive, 1).unwrap();
        assert!((r - 1.0).abs() <= 1e-10);

        let t = Sampling::tau_nice(3, 2).unwrap();
        let v = eso_tau_nice(&data, 2).unwrap().v;
        let halved: Vec<f64> = v.iter().map(|x| x / 2.0).collect();
        assert!(eso_check(&data, &t, &v, EsoCheckMode::Exhaustive, 1).unwrap() <= 1.0 + 1e-10);
        assert!(eso_check(&data, &t, &halved, EsoCheckMode::Exhaustive, 1).unwrap() > 1.0);

        let ind = Sampling::independent(vec![0.3, 0.6, 0.9]).unwrap();
        let v = eso_generic(&data, &ind.stats()).v;
        assert!(eso_check(&data, &ind, &v, EsoCheckMode::Exhaustive, 5).unwrap() <= 1.0 + 1e-10);
        let mc = eso_check(&data, &ind, &v, EsoCheckMode::MonteCarlo { trials: 20_000 }, 5).unwrap();
        assert!(mc <= 1.1);
    }

    #[test]
    fn smooth_examples() {
        let s = Sampling::uniform_serial(2).unwrap();
        let st = s.stats();
        let b = beta(&s, &st, &BiasCorrector::MarginalInverse).unwrap();
        assert_eq!(b, vec![2.0, 2.0]);
        let plan = stepsize_smooth(0.1, &[1.0, 1.0], &[0.5, 0.5], &st, &b).unwrap();
        assert!((plan.alpha - 0.5 / 2.1).abs() < 1e-15);
        assert!((plan.sigma[0] - 1.0 / (4.0 * 2.0 * 0.5 * 0.5)).abs() < 1e-15);

        // full batch through tau = n
        let n = 4;
        let s = Sampling::tau_nice(n, n).unwrap();
        let st = s.stats();
        let b = beta(&s, &st, &BiasCorrector::MarginalInverse).unwrap();
        let l = [1.0, 2.0, 0.5, 3.0];
        let lam = [0.25; 4];
        let plan = stepsize_smooth(0.2, &l, &lam, &st, &b).unwrap();
        let expected = l.iter().map(|li| 1.0 / (0.2 + 4.0 * li * 0.25 * n as f64)).fold(f64::INFINITY, f64::min);
        assert!((plan.alpha - expected).abs() < 1e-15);

        assert!(matches!(
            stepsize_smooth(0.0, &[1.0], &[1.0], &st, &[1.0]),
            Err(Error::NonPositiveInput { .. })
        ));
    }

    #[test]
    fn tau_nice_complexity_matches_closed_form() {
        let (n, tau, mu) = (10, 3, 0.05);
        let l: Vec<f64> = (0..n).map(|i| 0.5 + i as f64 * 0.3).collect();
        let lam = vec![1.0 / n as f64; n];
        let s = Sampling::tau_nice(n, tau).unwrap();
        let st = s.stats();
        let b = beta(&s, &st, &BiasCorrector::MarginalInverse).unwrap();
        let plan = stepsize_smooth(mu, &l, &lam, &st, &b).unwrap();
        let lmax = l.iter().zip(&lam).map(|(a, b)| a * b).fold(0.0, f64::max);
        let expected = n as f64 / tau as f64 + 4.0 * n as f64 * lmax / mu;
        assert!((plan.complexity.unwrap() - expected).abs() < 1e-10 * expected);
        let eps = 1e-6;
        assert!((plan.predicted_iters(eps).unwrap() - expected * (1.0 / eps).ln()).abs() < 1e-8 * expected);
    }

    #[test]
    fn growth_examples() {
        let st = Sampling::tau_nice(2, 2).unwrap().stats();
        let plan = stepsize_growth(None, 1.0, &[2.0, 2.0], &[0.5, 0.5], 4.0, &st).unwrap();
        assert!((plan.alpha - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(plan.regime, Regime::GrowthMuFree);
        assert!(plan.predicted_iters(1e-6).is_none());

        // mu at the largest admissible value reproduces the mu-free bound
        let st = Sampling::uniform_serial(2).unwrap().stats();
        let (v, lam, gamma) = ([1.0, 1.0], [0.5, 0.5], 4.0);
        let mu = 4.0 * v[0] * lam[0] / gamma;
        let with = stepsize_growth(Some(mu), 1e-9, &v, &lam, gamma, &st).unwrap();
        let without = stepsize_growth(None, 1e-9, &v, &lam, gamma, &st).unwrap();
        assert!((with.alpha - without.alpha).abs() < 1e-15);
        assert!((with.sigma[0] - gamma / (2.0 * v[0] * lam[0])).abs() < 1e-15);

        let tight = stepsize_growth(Some(0.01), 1e6, &v, &lam, gamma, &st).unwrap();
        assert!((tight.alpha - 1.0 / 3e6).abs() < 1e-20);
    }

    #[test]
    fn strong_examples() {
        let st = Sampling::uniform_serial(2).unwrap().stats();
        let plan = stepsize_strong(1.0, &[1.0, 1.0], &[0.5, 0.5], 1.0, &st).unwrap();
        assert!((plan.alpha - 0.2).abs() < 1e-15);
        assert!((plan.complexity.unwrap() - (1.0 + 2.0 + 1.5 / 0.5)).abs() < 1e-14);
        let mut last = f64::INFINITY;
        for mu in [0.1, 1.0, 10.0, 100.0, 1e4] {
            let a = stepsize_strong(mu, &[1.0, 1.0], &[0.5, 0.5], 1.0, &st).unwrap().alpha;
            assert!(a < last);
            last = a;
        }
    }

    #[test]
    fn importance_serial_examples() {
        let plan = importance_serial(1.0, &[1.0, 3.0]).unwrap();
        assert!((plan.probs[0] - 0.3).abs() < 1e-15 && (plan.probs[1] - 0.7).abs() < 1e-15);
        let bound = |p1: f64| {
            let p = [p1, 1.0 - p1];
            let l = [1.0, 3.0];
            (0..2).map(|i| (1.0 + 4.0 * l[i] / 2.0) / p[i]).fold(0.0, f64::max)
        };
        let best = (1..1000).map(|k| k as f64 / 1000.0).min_by(|a, b| bound(*a).total_cmp(&bound(*b))).unwrap();
        assert!((best - 0.3).abs() <= 1e-3);
        assert!((plan.complexity - bound(0.3)).abs() < 1e-12);

        let plan = importance_serial(1.0, &[2.0; 5]).unwrap();
        assert!(plan.probs.iter().all(|p| (p - 0.2).abs() < 1e-15));
        let plan = importance_serial(1e12, &[1.0, 100.0]).unwrap();
        assert!((plan.probs[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn importance_partition_examples() {
        let plan = importance_partition(1.0, &[2.0, 1.0], &[1, 3], 4).unwrap();
        assert!((plan.probs[0] - 12.0 / 28.0).abs() < 1e-15);
        assert!((plan.probs[1] - 16.0 / 28.0).abs() < 1e-15);
        let plan = importance_partition(1.0, &[3.0, 1.0], &[1, 3], 4).unwrap();
        assert!((plan.probs[0] - 0.5).abs() < 1e-15);
        let single = importance_partition(0.5, &[1.0, 2.0, 4.0], &[1, 1, 1], 3).unwrap();
        assert_eq!(single, importance_serial(0.5, &[1.0, 2.0, 4.0]).unwrap());
        assert!(importance_partition(1.0, &[1.0], &[2], 3).is_err());
    }

    #[test]
    fn importance_independent_examples() {
        let lam = [1.0 / 3.0; 3];
        let plan = importance_independent(1.0, &[1.0, 1.0, 1.0], &lam, 2).unwrap();
        assert!(plan.probs.iter().all(|p| (p - 2.0 / 3.0).abs() < 1e-15));
        assert!(plan.saturated.is_empty());

        let plan = importance_independent(1.0, &[1.0, 1.0, 10.0], &lam, 2).unwrap();
        assert_eq!(plan.saturated, vec![2]);
        assert!((plan.probs[0] - 0.5).abs() < 1e-15);
        assert!((plan.probs[1] - 0.5).abs() < 1e-15);
        assert_eq!(plan.probs[2], 1.0);
        let q: [f64; 3] = [10.0 / 51.0, 10.0 / 51.0, 82.0 / 51.0];
        assert!(plan.probs.iter().zip(q).all(|(p, qi)| qi.min(1.0) <= *p + 1e-15));

        let plan = importance_independent(1.0, &[1.0, 5.0, 0.1], &lam, 3).unwrap();
        assert_eq!(plan.probs, vec![1.0; 3]);
    }

    proptest! {
        #[test]
        fn independent_importance_is_feasible(
            l in prop::collection::vec(0.01..100.0f64, 1..30),
            mu in 1e-4..10.0f64,
            tau_frac in 0.0..1.0f64,
        ) {
            let n = l.len();
            let tau = 1 + ((n - 1) as f64 * tau_frac) as usize;
            let lam = vec![1.0 / n as f64; n];
            let plan = importance_independent(mu, &l, &lam, tau).unwrap();
            let sum: f64 = plan.probs.iter().sum();
            prop_assert!((sum - tau as f64).abs() <= 1e-10);
            let scores: Vec<f64> = (0..n).map(|i| mu + 4.0 * l[i] * lam[i] * (tau as f64 + 1.0)).collect();
            let total: f64 = scores.iter().sum();
            for i in 0..n {
                let q = tau as f64 * scores[i] / total;
                prop_assert!(plan.probs[i] <= 1.0 && plan.probs[i] > 0.0);
                prop_assert!(q.min(1.0) <= plan.probs[i] + 1e-12);
            }
            prop_assert!(Sampling::independent(plan.probs).is_ok());
        }

        #[test]
        fn plans_satisfy_their_bounds(
            l in prop::collection::vec(0.1..10.0f64, 2..8),
            mu in 1e-3..5.0f64,
            gamma in prop_oneof![Just(1.0), Just(4.0)],
            l_total in 0.1..10.0f64,
        ) {
            let n = l.len();
            let lam = vec![1.0 / n as f64; n];
            let s = Sampling::independent((0..n).map(|i| 0.2 + 0.1 * (i % 5) as f64).collect()).unwrap();
            let st = s.stats();
            for corrector in [BiasCorrector::MarginalInverse, BiasCorrector::SizeOptimal] {
                let b = beta(&s, &st, &corrector).unwrap();
                let plan = stepsize_smooth(mu, &l, &lam, &st, &b).unwrap();
                for i in 0..n {
                    prop_assert!(plan.alpha <= st.p[i] / (mu + 4.0 * l[i] * b[i] * lam[i] * st.p[i]));
                }
            }
            let plan = stepsize_strong(mu, &l, &lam, gamma, &st).unwrap();
            for i in 0..n {
                prop_assert!(plan.alpha <= st.p[i] / (mu + 3.0 * l[i] * lam[i] / gamma));
            }
            let plan = stepsize_growth(Some(mu), l_total, &l, &lam, gamma, &st).unwrap();
            prop_assert!(plan.alpha <= 1.0 / (3.0 * l_total));
            for i in 0..n {
                prop_assert!(plan.alpha <= 2.0 / 3.0 * st.p[i] / (mu + 4.0 * l[i] * lam[i] / gamma));
            }
            let plan = stepsize_growth(None, l_total, &l, &lam, gamma, &st).unwrap();
            prop_assert!(plan.alpha <= 1.0 / (3.0 * l_total));
            for i in 0..n {
                prop_assert!(plan.alpha <= st.p[i] * gamma / (12.0 * l[i] * lam[i]) * (1.0 + 4.0 * f64::EPSILON));
            }
        }
    }
}
