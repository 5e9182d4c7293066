//! Proper samplings over subsets of `{0, .., n-1}` and the bias-correcting
//! weights that make the SAGA gradient estimator unbiased.
//!
//! A sampling is a distribution over subsets. It is *proper* when every index
//! has a positive inclusion probability `p_i = P[i in S]`; the empty set may
//! carry mass (independent samplings draw it with probability
//! `prod_i (1 - p_i)`).
//!
//! Subsets are always sorted lists of 0-based indices.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::gauss_legendre_unit;
use crate::math::{exp, ln};

/// Largest support the exhaustive routines will materialize.
pub const ENUMERATION_LIMIT: usize = 1 << 20;

const MASS_TOL: f64 = 1e-12;

/// A finite support: `(subset, probability)` pairs.
pub type Support = Vec<(Vec<usize>, f64)>;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SamplingKind {
    /// Explicit list of subsets with their probabilities.
    Enumerated { support: Support },
    /// Exactly one index per draw, index `i` with probability `probs[i]`.
    Serial { probs: Vec<f64> },
    /// Uniform over all subsets of cardinality `tau`.
    TauNice { tau: usize },
    /// Index `i` included independently with probability `probs[i]`.
    Independent { probs: Vec<f64> },
    /// Exactly one group of a fixed partition per draw.
    Partition { groups: Vec<Vec<usize>>, probs: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sampling {
    n: usize,
    kind: SamplingKind,
    /// cumulative probabilities for the finite-support kinds
    cdf: Vec<f64>,
}

/// Exact statistics of a sampling.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SamplingStats {
    /// marginals `P[i in S]`
    pub p: Vec<f64>,
    /// expected size `E|S|`
    pub tau: f64,
    /// `E[|S| | i in S]`
    pub cond_size: Vec<f64>,
    /// `E[1/|S| | i in S]`
    pub cond_inv_size: Vec<f64>,
}

fn check_probability(position: usize, value: f64) -> Result<()> {
    if !value.is_finite() || !(0.0..=1.0).contains(&value) {
        return Err(Error::BadProbability { position, value });
    }
    Ok(())
}

fn check_mass(probs: impl Iterator<Item = f64>) -> Result<()> {
    let sum: f64 = probs.sum();
    if (sum - 1.0).abs() > MASS_TOL {
        return Err(Error::ProbabilityMass { sum });
    }
    Ok(())
}

fn cumulative(probs: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    probs
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    let mut c: u128 = 1;
    for j in 0..k {
        c = c * (n - j) as u128 / (j + 1) as u128;
    }
    c
}

impl Sampling {
    pub fn enumerated(n: usize, support: Support) -> Result<Self> {
        if support.len() > ENUMERATION_LIMIT {
            return Err(Error::EnumerationTooLarge {
                size: support.len() as u128,
                limit: ENUMERATION_LIMIT,
            });
        }
        let mut cleaned = Vec::with_capacity(support.len());
        for (k, (subset, prob)) in support.into_iter().enumerate() {
            check_probability(k, prob)?;
            let mut subset = subset;
            subset.sort_unstable();
            if subset.iter().any(|&i| i >= n) {
                return Err(Error::BadSubset { subset: k, reason: "index out of range" });
            }
            if subset.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::BadSubset { subset: k, reason: "duplicate index" });
            }
            cleaned.push((subset, prob));
        }
        check_mass(cleaned.iter().map(|(_, p)| *p))?;
        let mut marginal = vec![0.0; n];
        for (subset, prob) in &cleaned {
            for &i in subset {
                marginal[i] += prob;
            }
        }
        if let Some(index) = marginal.iter().position(|&p| p <= 0.0) {
            return Err(Error::ZeroMarginal { index });
        }
        let cdf = cumulative(cleaned.iter().map(|(_, p)| *p));
        Ok(Self { n, kind: SamplingKind::Enumerated { support: cleaned }, cdf })
    }

    pub fn serial(probs: Vec<f64>) -> Result<Self> {
        for (i, &p) in probs.iter().enumerate() {
            check_probability(i, p)?;
            if p == 0.0 {
                return Err(Error::ZeroMarginal { index: i });
            }
        }
        check_mass(probs.iter().copied())?;
        let cdf = cumulative(probs.iter().copied());
        Ok(Self { n: probs.len(), kind: SamplingKind::Serial { probs }, cdf })
    }

    pub fn uniform_serial(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::BadTau { tau: 1, n });
        }
        Self::serial(vec![1.0 / n as f64; n])
    }

    pub fn tau_nice(n: usize, tau: usize) -> Result<Self> {
        if tau == 0 || tau > n {
            return Err(Error::BadTau { tau, n });
        }
        Ok(Self { n, kind: SamplingKind::TauNice { tau }, cdf: Vec::new() })
    }

    pub fn independent(probs: Vec<f64>) -> Result<Self> {
        for (i, &p) in probs.iter().enumerate() {
            check_probability(i, p)?;
            if p == 0.0 {
                return Err(Error::ZeroMarginal { index: i });
            }
        }
        Ok(Self { n: probs.len(), kind: SamplingKind::Independent { probs }, cdf: Vec::new() })
    }

    pub fn partition(n: usize, groups: Vec<Vec<usize>>, probs: Vec<f64>) -> Result<Self> {
        if groups.len() != probs.len() {
            return Err(Error::DimensionMismatch {
                what: "group probabilities",
                expected: groups.len(),
                got: probs.len(),
            });
        }
        let mut seen = vec![false; n];
        let mut groups = groups;
        for group in groups.iter_mut() {
            if group.is_empty() {
                return Err(Error::BadPartition { reason: "empty group" });
            }
            group.sort_unstable();
            for &i in group.iter() {
                if i >= n {
                    return Err(Error::BadPartition { reason: "index out of range" });
                }
                if seen[i] {
                    return Err(Error::BadPartition { reason: "groups overlap" });
                }
                seen[i] = true;
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::BadPartition { reason: "groups do not cover every index" });
        }
        for (g, &p) in probs.iter().enumerate() {
            check_probability(g, p)?;
            if p == 0.0 {
                return Err(Error::ZeroMarginal { index: groups[g][0] });
            }
        }
        check_mass(probs.iter().copied())?;
        let cdf = cumulative(probs.iter().copied());
        Ok(Self { n, kind: SamplingKind::Partition { groups, probs }, cdf })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &SamplingKind {
        &self.kind
    }

    /// Number of subsets with positive probability, if it fits in `u128`.
    pub fn support_size(&self) -> u128 {
        match &self.kind {
            SamplingKind::Enumerated { support } => support.len() as u128,
            SamplingKind::Serial { probs } => probs.len() as u128,
            SamplingKind::TauNice { tau } => binomial(self.n, *tau),
            SamplingKind::Independent { probs } => {
                let free = probs.iter().filter(|&&p| p < 1.0).count() as u32;
                if free >= 127 {
                    u128::MAX
                } else {
                    1u128 << free
                }
            }
            SamplingKind::Partition { groups, .. } => groups.len() as u128,
        }
    }

    /// Materializes the support. Fails beyond [`ENUMERATION_LIMIT`] subsets.
    pub fn support(&self) -> Result<Support> {
        let size = self.support_size();
        if size > ENUMERATION_LIMIT as u128 {
            return Err(Error::EnumerationTooLarge { size, limit: ENUMERATION_LIMIT });
        }
        Ok(match &self.kind {
            SamplingKind::Enumerated { support } => support.clone(),
            SamplingKind::Serial { probs } => {
                probs.iter().enumerate().map(|(i, &p)| (vec![i], p)).collect()
            }
            SamplingKind::TauNice { tau } => {
                let prob = 1.0 / size as f64;
                let mut out = Vec::with_capacity(size as usize);
                let mut comb: Vec<usize> = (0..*tau).collect();
                loop {
                    out.push((comb.clone(), prob));
                    // advance to the next combination in lexicographic order
                    let mut k = *tau;
                    while k > 0 && comb[k - 1] == self.n - *tau + k - 1 {
                        k -= 1;
                    }
                    if k == 0 {
                        break;
                    }
                    comb[k - 1] += 1;
                    for j in k..*tau {
                        comb[j] = comb[j - 1] + 1;
                    }
                }
                out
            }
            SamplingKind::Independent { probs } => {
                let n = self.n;
                let mut out = Vec::new();
                for mask in 0u64..(1u64 << n) {
                    let mut prob = 1.0;
                    let mut subset = Vec::new();
                    for (i, &p) in probs.iter().enumerate() {
                        if mask >> i & 1 == 1 {
                            prob *= p;
                            subset.push(i);
                        } else {
                            prob *= 1.0 - p;
                        }
                    }
                    if prob > 0.0 {
                        out.push((subset, prob));
                    }
                }
                out
            }
            SamplingKind::Partition { groups, probs } => {
                groups.iter().cloned().zip(probs.iter().copied()).collect()
            }
        })
    }

    /// Exact marginal and conditional-size statistics.
    pub fn stats(&self) -> SamplingStats {
        let n = self.n;
        match &self.kind {
            SamplingKind::Enumerated { support } => stats_from_support(n, support),
            SamplingKind::Serial { probs } => SamplingStats {
                p: probs.clone(),
                tau: 1.0,
                cond_size: vec![1.0; n],
                cond_inv_size: vec![1.0; n],
            },
            SamplingKind::TauNice { tau } => {
                let t = *tau as f64;
                SamplingStats {
                    p: vec![t / n as f64; n],
                    tau: t,
                    cond_size: vec![t; n],
                    cond_inv_size: vec![1.0 / t; n],
                }
            }
            SamplingKind::Independent { probs } => {
                let tau: f64 = probs.iter().sum();
                SamplingStats {
                    p: probs.clone(),
                    tau,
                    cond_size: probs.iter().map(|p| tau + 1.0 - p).collect(),
                    cond_inv_size: independent_cond_inv_size(probs),
                }
            }
            SamplingKind::Partition { groups, probs } => {
                let mut stats = SamplingStats {
                    p: vec![0.0; n],
                    tau: 0.0,
                    cond_size: vec![0.0; n],
                    cond_inv_size: vec![0.0; n],
                };
                for (group, &prob) in groups.iter().zip(probs) {
                    let size = group.len() as f64;
                    stats.tau += prob * size;
                    for &i in group {
                        stats.p[i] = prob;
                        stats.cond_size[i] = size;
                        stats.cond_inv_size[i] = 1.0 / size;
                    }
                }
                stats
            }
        }
    }

    /// Convenience single draw; allocates. Use [`Sampler`] in loops.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<usize> {
        let mut out = Vec::new();
        self.sampler().draw_into(rng, &mut out);
        out
    }

    pub fn sampler(&self) -> Sampler<'_> {
        Sampler { sampling: self, perm: Vec::new() }
    }

    fn pick_from_cdf<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let k = self.cdf.partition_point(|&c| c <= u);
        if k < self.cdf.len() {
            return k;
        }
        // u fell past the rounded total: take the last entry with positive mass
        let mut last = self.cdf.len() - 1;
        while last > 0 && self.cdf[last] == self.cdf[last - 1] {
            last -= 1;
        }
        last
    }
}

/// Statistics by direct summation over a finite support.
pub fn stats_from_support(n: usize, support: &[(Vec<usize>, f64)]) -> SamplingStats {
    let mut p = vec![0.0; n];
    let mut size_acc = vec![0.0; n];
    let mut inv_acc = vec![0.0; n];
    let mut tau = 0.0;
    for (subset, prob) in support {
        let size = subset.len() as f64;
        tau += prob * size;
        for &i in subset {
            p[i] += prob;
            size_acc[i] += prob * size;
            inv_acc[i] += prob / size;
        }
    }
    SamplingStats {
        cond_size: size_acc.iter().zip(&p).map(|(a, pi)| a / pi).collect(),
        cond_inv_size: inv_acc.iter().zip(&p).map(|(a, pi)| a / pi).collect(),
        p,
        tau,
    }
}

/// `E[1/|S| | i in S]` for an independent sampling.
///
/// Given `i in S`, `|S| = 1 + K` with `K` Poisson-binomial over `j != i`, and
/// `E[1/(1+K)] = int_0^1 prod_{j != i} (1 - p_j + p_j t) dt`. The integrand is
/// a polynomial of degree `n - 1`, so a Gauss-Legendre rule with
/// `n/2 + 1` nodes evaluates it exactly; total cost is `O(n^2)`.
fn independent_cond_inv_size(probs: &[f64]) -> Vec<f64> {
    let n = probs.len();
    let (nodes, weights) = gauss_legendre_unit(n / 2 + 1);
    let mut out = vec![0.0; n];
    let mut logs = vec![0.0; n];
    for (&t, &w) in nodes.iter().zip(&weights) {
        for (l, &p) in logs.iter_mut().zip(probs) {
            *l = ln(1.0 - p * (1.0 - t));
        }
        let total: f64 = logs.iter().sum();
        for (o, l) in out.iter_mut().zip(&logs) {
            *o += w * exp(total - l);
        }
    }
    out
}

/// Reusable draw state for one sampling. Holds the permutation buffer used by
/// the partial Fisher-Yates selection of tau-nice samplings.
pub struct Sampler<'a> {
    sampling: &'a Sampling,
    perm: Vec<usize>,
}

impl Sampler<'_> {
    /// Draws a subset into `out` (cleared first), sorted ascending.
    pub fn draw_into<R: Rng + ?Sized>(&mut self, rng: &mut R, out: &mut Vec<usize>) {
        self.sampling.draw_with(rng, &mut self.perm, out);
    }
}

impl Sampling {
    /// Draws a subset into `out` (cleared first), sorted ascending. `perm` is
    /// scratch space kept between calls; any permutation of the indices works
    /// as a starting point for the partial shuffle.
    pub fn draw_with<R: Rng + ?Sized>(&self, rng: &mut R, perm: &mut Vec<usize>, out: &mut Vec<usize>) {
        out.clear();
        match &self.kind {
            SamplingKind::Enumerated { support } => {
                out.extend_from_slice(&support[self.pick_from_cdf(rng)].0);
            }
            SamplingKind::Serial { .. } => out.push(self.pick_from_cdf(rng)),
            SamplingKind::TauNice { tau } => {
                if perm.len() != self.n {
                    perm.clear();
                    perm.extend(0..self.n);
                }
                for k in 0..*tau {
                    let j = rng.random_range(k..self.n);
                    perm.swap(k, j);
                }
                out.extend_from_slice(&perm[..*tau]);
                out.sort_unstable();
            }
            SamplingKind::Independent { probs } => {
                for (i, &p) in probs.iter().enumerate() {
                    if rng.random::<f64>() < p {
                        out.push(i);
                    }
                }
            }
            SamplingKind::Partition { groups, .. } => {
                out.extend_from_slice(&groups[self.pick_from_cdf(rng)]);
            }
        }
    }
}

/// Explicit per-subset weights `theta_C^i`, stored aligned with the sorted
/// subset.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightTable {
    entries: BTreeMap<Vec<usize>, Vec<f64>>,
}

impl WeightTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts weights for `subset`; `weights[k]` belongs to the k-th smallest
    /// index of the subset.
    pub fn insert(&mut self, subset: Vec<usize>, weights: Vec<f64>) -> Result<()> {
        if subset.len() != weights.len() {
            return Err(Error::DimensionMismatch {
                what: "subset weights",
                expected: subset.len(),
                got: weights.len(),
            });
        }
        let mut pairs: Vec<(usize, f64)> = subset.into_iter().zip(weights).collect();
        pairs.sort_unstable_by_key(|(i, _)| *i);
        let (subset, weights) = pairs.into_iter().unzip();
        self.entries.insert(subset, weights);
        Ok(())
    }

    /// A random bias-correcting table for an enumerable sampling: positive
    /// raw weights `w_C^i`, rescaled per index so that
    /// `sum_{C containing i} p_C theta_C^i = 1`.
    pub fn random_valid<R: Rng + ?Sized>(sampling: &Sampling, rng: &mut R) -> Result<Self> {
        let support = sampling.support()?;
        let raw: Vec<Vec<f64>> = support
            .iter()
            .map(|(c, _)| c.iter().map(|_| rng.random_range(0.1..2.0)).collect())
            .collect();
        let mut norm = vec![0.0; sampling.n()];
        for ((subset, prob), w) in support.iter().zip(&raw) {
            for (&i, wi) in subset.iter().zip(w) {
                norm[i] += prob * wi;
            }
        }
        let mut table = Self::new();
        for ((subset, _), w) in support.into_iter().zip(raw) {
            if subset.is_empty() {
                continue;
            }
            let weights = subset.iter().zip(&w).map(|(&i, wi)| wi / norm[i]).collect();
            table.insert(subset, weights)?;
        }
        Ok(table)
    }

    pub fn get(&self, subset: &[usize]) -> Option<&[f64]> {
        self.entries.get(subset).map(Vec::as_slice)
    }
}

/// Bias-correcting random vector: per-subset weights `theta_C^i` with
/// `sum_{C containing i} p_C theta_C^i = 1` for every index.
#[derive(Debug, Clone, PartialEq)]
pub enum BiasCorrector {
    /// `theta_C^i = 1/p_i`; valid for every proper sampling.
    MarginalInverse,
    /// `theta_C^i = 1/(p_i |C| E[1/|S| | i in S])`, the minimizer of `beta_i`.
    SizeOptimal,
    ExplicitTable(WeightTable),
}

impl BiasCorrector {
    /// `theta_C^i` for `i` in the sorted subset `subset`.
    pub fn weight(&self, stats: &SamplingStats, subset: &[usize], i: usize) -> Result<f64> {
        let pos = subset.binary_search(&i).map_err(|_| Error::IndexNotInSubset { index: i })?;
        Ok(match self {
            BiasCorrector::MarginalInverse => 1.0 / stats.p[i],
            BiasCorrector::SizeOptimal => {
                1.0 / (stats.p[i] * subset.len() as f64 * stats.cond_inv_size[i])
            }
            BiasCorrector::ExplicitTable(table) => table
                .get(subset)
                .ok_or(Error::BadSubset { subset: 0, reason: "no weights stored for subset" })?[pos],
        })
    }

    /// Fills `out` with the weights of every index of `subset`, in order.
    pub fn weights_into(
        &self,
        stats: &SamplingStats,
        subset: &[usize],
        out: &mut Vec<f64>,
    ) -> Result<()> {
        out.clear();
        match self {
            BiasCorrector::MarginalInverse => out.extend(subset.iter().map(|&i| 1.0 / stats.p[i])),
            BiasCorrector::SizeOptimal => {
                let size = subset.len() as f64;
                out.extend(
                    subset.iter().map(|&i| 1.0 / (stats.p[i] * size * stats.cond_inv_size[i])),
                )
            }
            BiasCorrector::ExplicitTable(table) => {
                if subset.is_empty() {
                    return Ok(());
                }
                let w = table
                    .get(subset)
                    .ok_or(Error::BadSubset { subset: 0, reason: "no weights stored for subset" })?;
                out.extend_from_slice(w);
            }
        }
        Ok(())
    }

    /// Largest deviation of `sum_{C containing i} p_C theta_C^i` from 1 over
    /// the (enumerable) support of `sampling`.
    pub fn unbiasedness_residual(&self, sampling: &Sampling, stats: &SamplingStats) -> Result<f64> {
        let support = sampling.support()?;
        let mut sums = vec![0.0; sampling.n()];
        let mut w = Vec::new();
        for (subset, prob) in &support {
            self.weights_into(stats, subset, &mut w)?;
            for (&i, &theta) in subset.iter().zip(&w) {
                sums[i] += prob * theta;
            }
        }
        Ok(sums.iter().fold(0.0f64, |m, s| m.max((s - 1.0).abs())))
    }

    /// Fails with `UnbiasednessViolated` when the weights are not bias-correcting.
    pub fn check_unbiased(&self, sampling: &Sampling, stats: &SamplingStats, tol: f64) -> Result<()> {
        if !matches!(self, BiasCorrector::ExplicitTable(_)) {
            return Ok(());
        }
        let support = sampling.support()?;
        let mut sums = vec![0.0; sampling.n()];
        let mut w = Vec::new();
        for (subset, prob) in &support {
            self.weights_into(stats, subset, &mut w)?;
            for (&i, &theta) in subset.iter().zip(&w) {
                sums[i] += prob * theta;
            }
        }
        match sums.iter().position(|s| (s - 1.0).abs() > tol) {
            Some(index) => Err(Error::UnbiasednessViolated { index, sum: sums[index] }),
            None => Ok(()),
        }
    }
}

/// `beta_i = sum_{C containing i} p_C |C| (theta_C^i)^2`.
pub fn beta(sampling: &Sampling, stats: &SamplingStats, corrector: &BiasCorrector) -> Result<Vec<f64>> {
    let summed = matches!(
        sampling.kind(),
        SamplingKind::Enumerated { .. } | SamplingKind::Partition { .. }
    ) || matches!(corrector, BiasCorrector::ExplicitTable(_));
    if summed {
        corrector.check_unbiased(sampling, stats, 1e-10)?;
        let mut out = vec![0.0; sampling.n()];
        let mut w = Vec::new();
        for (subset, prob) in sampling.support()? {
            corrector.weights_into(stats, &subset, &mut w)?;
            let size = subset.len() as f64;
            for (&i, &theta) in subset.iter().zip(&w) {
                out[i] += prob * size * theta * theta;
            }
        }
        return Ok(out);
    }
    let n = sampling.n();
    Ok(match (corrector, sampling.kind()) {
        (BiasCorrector::MarginalInverse, SamplingKind::Serial { probs }) => {
            probs.iter().map(|p| 1.0 / p).collect()
        }
        (BiasCorrector::MarginalInverse, SamplingKind::TauNice { .. }) => vec![n as f64; n],
        (BiasCorrector::MarginalInverse, _) => {
            stats.cond_size.iter().zip(&stats.p).map(|(c, p)| c / p).collect()
        }
        (BiasCorrector::SizeOptimal, _) => {
            stats.p.iter().zip(&stats.cond_inv_size).map(|(p, e)| 1.0 / (p * e)).collect()
        }
        (BiasCorrector::ExplicitTable(_), _) => unreachable!("explicit tables are summed"),
    })
}


#[cfg(test)]
mod props {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn samplings(seed: u64, n: usize) -> Vec<Sampling> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        crate::verify::random_samplings(&mut rng, n).unwrap()
    }

    proptest! {
        #[test]
        fn closed_form_stats_match_enumeration(seed in any::<u64>(), n in 1usize..=10) {
            for s in samplings(seed, n) {
                let closed = s.stats();
                let summed = stats_from_support(n, &s.support().unwrap());
                for i in 0..n {
                    prop_assert!((closed.p[i] - summed.p[i]).abs() <= 1e-10);
                    prop_assert!((closed.cond_size[i] - summed.cond_size[i]).abs() <= 1e-10);
                    prop_assert!((closed.cond_inv_size[i] - summed.cond_inv_size[i]).abs() <= 1e-10);
                }
            }
        }

        #[test]
        fn every_corrector_is_unbiased(seed in any::<u64>(), n in 1usize..=8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
            for s in samplings(seed, n) {
                let st = s.stats();
                let table = WeightTable::random_valid(&s, &mut rng).unwrap();
                for bc in [BiasCorrector::MarginalInverse, BiasCorrector::SizeOptimal, BiasCorrector::ExplicitTable(table)] {
                    prop_assert!(bc.unbiasedness_residual(&s, &st).unwrap() <= 1e-10);
                }
            }
        }

        #[test]
        fn size_optimal_beta_is_smallest(seed in any::<u64>(), n in 1usize..=8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
            for s in samplings(seed, n) {
                let st = s.stats();
                let best = beta(&s, &st, &BiasCorrector::SizeOptimal).unwrap();
                for _ in 0..3 {
                    let table = BiasCorrector::ExplicitTable(WeightTable::random_valid(&s, &mut rng).unwrap());
                    let other = beta(&s, &st, &table).unwrap();
                    for i in 0..n {
                        prop_assert!(best[i] <= other[i] + 1e-10, "{} > {}", best[i], other[i]);
                    }
                }
            }
        }

        #[test]
        fn inverse_mean_size_is_below_mean_size(seed in any::<u64>(), n in 1usize..=12) {
            for s in samplings(seed, n) {
                let st = s.stats();
                for i in 0..n {
                    prop_assert!(1.0 / st.cond_inv_size[i] <= st.cond_size[i] * (1.0 + 1e-12));
                }
            }
        }
    }
}
