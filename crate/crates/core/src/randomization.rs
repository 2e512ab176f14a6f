//! Studentized randomization test for partially paired data.
//!
//! A group element flips the components of each complete pair independently
//! and rearranges the pooled incomplete observations
//! `Z = (first_only ++ second_only)`; the first `n2` rearranged entries become
//! the new first arm and the remaining `n3` the new second arm. The null
//! distribution of the weighted statistic is approximated by its values over
//! random group elements (Monte Carlo) or over the whole group (exact).

use crate::error::{Error, Result};
use crate::rng::{self, Stream};
use crate::sample::PartiallyPairedSample;
use crate::statistics::{
    check_alpha, combine, complete_weight, paired_t_from_differences, sw_scale, weighted_statistic, welch_from_arms,
    Side, WeightRule,
};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

/// Variance floor used by [`DegeneracyPolicy::Floor`].
pub const VARIANCE_FLOOR: f64 = 1e-300;

/// Default cap on the number of group elements enumerated by the exact test.
pub const DEFAULT_GROUP_LIMIT: u64 = 10_000_000;

/// One element of the randomization group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomizationDraw {
    flips: Vec<bool>,
    arrangement: Vec<usize>,
}

impl RandomizationDraw {
    /// `arrangement[k]` is the 0-based pooled index that lands in slot `k`.
    pub fn new(flips: Vec<bool>, arrangement: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; arrangement.len()];
        for &i in &arrangement {
            if i >= seen.len() || seen[i] {
                return Err(Error::InvalidParameter(format!(
                    "arrangement {arrangement:?} is not a permutation"
                )));
            }
            seen[i] = true;
        }
        Ok(Self { flips, arrangement })
    }

    pub fn identity(n1: usize, pooled: usize) -> Self {
        Self {
            flips: vec![false; n1],
            arrangement: (0..pooled).collect(),
        }
    }

    /// Uniform draw: Fisher–Yates shuffle of the pooled slots, then one flip
    /// bit per pair taken from successive 64-bit words.
    pub fn random<R: Rng + ?Sized>(n1: usize, pooled: usize, rng: &mut R) -> Self {
        let mut arrangement: Vec<usize> = (0..pooled).collect();
        shuffle(&mut arrangement, rng);
        let mut flips = vec![false; n1];
        fill_flips(&mut flips, rng);
        Self { flips, arrangement }
    }

    pub fn flips(&self) -> &[bool] {
        &self.flips
    }

    pub fn arrangement(&self) -> &[usize] {
        &self.arrangement
    }

    /// The draw equivalent to applying `self` first and `next` second.
    pub fn then(&self, next: &RandomizationDraw) -> Result<Self> {
        if self.flips.len() != next.flips.len() || self.arrangement.len() != next.arrangement.len() {
            return Err(Error::DimensionMismatch {
                flips: next.flips.len(),
                slots: next.arrangement.len(),
                n1: self.flips.len(),
                pooled: self.arrangement.len(),
            });
        }
        Ok(Self {
            flips: self.flips.iter().zip(&next.flips).map(|(a, b)| a ^ b).collect(),
            arrangement: next.arrangement.iter().map(|&k| self.arrangement[k]).collect(),
        })
    }

    fn check(&self, sample: &PartiallyPairedSample) -> Result<()> {
        let pooled = sample.n2() + sample.n3();
        if self.flips.len() != sample.n1() || self.arrangement.len() != pooled {
            return Err(Error::DimensionMismatch {
                flips: self.flips.len(),
                slots: self.arrangement.len(),
                n1: sample.n1(),
                pooled,
            });
        }
        Ok(())
    }
}

fn shuffle<R: Rng + ?Sized>(xs: &mut [usize], rng: &mut R) {
    for i in (1..xs.len()).rev() {
        let j = rng.random_range(0..=i);
        xs.swap(i, j);
    }
}

fn fill_flips<R: Rng + ?Sized>(flips: &mut [bool], rng: &mut R) {
    for chunk in flips.chunks_mut(64) {
        let word: u64 = rng.random();
        for (bit, f) in chunk.iter_mut().enumerate() {
            *f = (word >> bit) & 1 == 1;
        }
    }
}

/// Transform a sample by a group element.
pub fn apply_draw(sample: &PartiallyPairedSample, draw: &RandomizationDraw) -> Result<PartiallyPairedSample> {
    draw.check(sample)?;
    let complete = sample
        .complete()
        .iter()
        .zip(&draw.flips)
        .map(|(&(a, b), &f)| if f { (b, a) } else { (a, b) })
        .collect();
    let z = sample.pooled_incomplete();
    let mut arranged: Vec<f64> = draw.arrangement.iter().map(|&i| z[i]).collect();
    let second_only = arranged.split_off(sample.n2());
    Ok(PartiallyPairedSample::from_parts_unchecked(
        complete,
        arranged,
        second_only,
    ))
}

/// What to do when a replicate has a zero variance estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegeneracyPolicy {
    /// Replace a zero variance by [`VARIANCE_FLOOR`].
    #[default]
    Floor,
    /// Fail the whole run.
    Strict,
}

impl DegeneracyPolicy {
    fn floor(self) -> Option<f64> {
        match self {
            DegeneracyPolicy::Floor => Some(VARIANCE_FLOOR),
            DegeneracyPolicy::Strict => None,
        }
    }
}

/// Permuted weighted statistic `T_p` for one group element.
pub fn permutation_statistic(
    sample: &PartiallyPairedSample,
    draw: &RandomizationDraw,
    rule: WeightRule,
    policy: DegeneracyPolicy,
) -> Result<f64> {
    let moved = apply_draw(sample, draw)?;
    let a = complete_weight(sample.n1(), sample.n2(), sample.n3(), rule);
    let floor = policy.floor();
    combine(
        a,
        || paired_t_from_differences(&moved.differences(), floor),
        || welch_from_arms(moved.first_only(), moved.second_only(), floor),
    )
}

/// How the two-sided p-value is formed from the replicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TwoSidedMethod {
    /// `min(2 p1, 2 - 2 p1)` with `p1 = #{T_b >= T} / B`.
    #[default]
    DoubledTail,
    /// `#{|T_b| >= |T|} / B`.
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueEstimator {
    /// `count / B`
    #[default]
    Plain,
    /// `(1 + count) / (1 + B)`
    AddOne,
}

/// Settings shared by the Monte Carlo procedures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PermutationConfig {
    pub rule: WeightRule,
    pub replicates: usize,
    pub seed: u64,
    pub alpha: f64,
    pub side: Side,
    pub two_sided: TwoSidedMethod,
    pub estimator: PValueEstimator,
    pub policy: DegeneracyPolicy,
    /// Evaluate replicates on the rayon pool. Results are identical either way.
    pub parallel: bool,
}

impl Default for PermutationConfig {
    fn default() -> Self {
        Self {
            rule: WeightRule::TwoN1OverNPlusN1,
            replicates: 1000,
            seed: 0,
            alpha: 0.05,
            side: Side::TwoSided,
            two_sided: TwoSidedMethod::DoubledTail,
            estimator: PValueEstimator::Plain,
            policy: DegeneracyPolicy::Floor,
            parallel: true,
        }
    }
}

/// The permutation values of `T` for one dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationDistribution {
    pub t_obs: f64,
    /// Weight `a` used for both the observed and the permuted statistic.
    pub weight: f64,
    pub values: Vec<f64>,
    pub exact: bool,
}

impl PermutationDistribution {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn ratio(&self, count: usize, estimator: PValueEstimator) -> f64 {
        let b = self.values.len() as f64;
        match estimator {
            PValueEstimator::Plain => count as f64 / b,
            PValueEstimator::AddOne => (1.0 + count as f64) / (1.0 + b),
        }
    }

    /// `#{T_b >= T} / B`
    pub fn p_greater(&self, estimator: PValueEstimator) -> f64 {
        let c = self.values.iter().filter(|&&v| v >= self.t_obs).count();
        self.ratio(c, estimator)
    }

    /// `#{T_b <= T} / B`
    pub fn p_less(&self, estimator: PValueEstimator) -> f64 {
        let c = self.values.iter().filter(|&&v| v <= self.t_obs).count();
        self.ratio(c, estimator)
    }

    pub fn p_two_sided(&self, method: TwoSidedMethod, estimator: PValueEstimator) -> f64 {
        match method {
            TwoSidedMethod::DoubledTail => {
                let p1 = self.p_greater(estimator);
                (2.0 * p1).min(2.0 - 2.0 * p1)
            }
            TwoSidedMethod::Absolute => {
                let t = self.t_obs.abs();
                let c = self.values.iter().filter(|v| v.abs() >= t).count();
                self.ratio(c, estimator)
            }
        }
    }

    pub fn p_value(&self, side: Side, method: TwoSidedMethod, estimator: PValueEstimator) -> f64 {
        match side {
            Side::Greater => self.p_greater(estimator),
            Side::Less => self.p_less(estimator),
            Side::TwoSided => self.p_two_sided(method, estimator),
        }
    }

    fn sorted(&self) -> Vec<f64> {
        let mut s = self.values.clone();
        s.sort_by(f64::total_cmp);
        s
    }

    /// `c_p(alpha)`: the smallest replicate value `v` with `#{T_b > v} / B <= alpha`.
    /// Ties are counted exactly.
    pub fn critical_value(&self, alpha: f64) -> f64 {
        critical_in_sorted(&self.sorted(), alpha)
    }

    /// Randomization weight at the critical value making the test level `alpha`.
    pub fn gamma(&self, alpha: f64) -> f64 {
        let c = self.critical_value(alpha);
        let above = self.values.iter().filter(|&&v| v > c).count();
        let at = self.values.iter().filter(|&&v| v == c).count();
        ((alpha * self.values.len() as f64 - above as f64) / at as f64).clamp(0.0, 1.0)
    }

    /// Rejection probability of the randomized one-sided test at `t`:
    /// 1 above `c_p`, `gamma_p` at `c_p`, 0 below.
    pub fn randomized_rejection(&self, t: f64, alpha: f64) -> f64 {
        let c = self.critical_value(alpha);
        if t > c {
            1.0
        } else if t == c {
            self.gamma(alpha)
        } else {
            0.0
        }
    }

    /// One value per line, shortest round-trip decimal form.
    pub fn write_values<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for v in &self.values {
            writeln!(out, "{v}")?;
        }
        out.flush()
    }
}

fn critical_in_sorted(sorted: &[f64], alpha: f64) -> f64 {
    let n = sorted.len();
    let budget = alpha * n as f64;
    let mut i = 0;
    while i < n {
        let v = sorted[i];
        let mut j = i + 1;
        while j < n && sorted[j] == v {
            j += 1;
        }
        // j = number of values <= v
        if ((n - j) as f64) <= budget {
            return v;
        }
        i = j;
    }
    sorted[n - 1]
}

/// Read a replicate dump written by [`PermutationDistribution::write_values`].
pub fn read_values<R: BufRead>(input: R) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v = t
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
        values.push(v);
    }
    Ok(values)
}

/// Reusable per-worker buffers for replicate evaluation.
struct Workspace {
    diffs: Vec<f64>,
    signed: Vec<f64>,
    pooled: Vec<f64>,
    arranged: Vec<f64>,
    perm: Vec<usize>,
    flips: Vec<bool>,
}

impl Workspace {
    fn new(sample: &PartiallyPairedSample) -> Self {
        let m = sample.n2() + sample.n3();
        Self {
            diffs: sample.differences(),
            signed: vec![0.0; sample.n1()],
            pooled: sample.pooled_incomplete(),
            arranged: vec![0.0; m],
            perm: (0..m).collect(),
            flips: vec![false; sample.n1()],
        }
    }

    fn t1(&mut self, floor: Option<f64>) -> Result<f64> {
        for ((s, &d), &f) in self.signed.iter_mut().zip(&self.diffs).zip(&self.flips) {
            *s = if f { -d } else { d };
        }
        paired_t_from_differences(&self.signed, floor)
    }

    fn t2(&mut self, n2: usize, floor: Option<f64>) -> Result<f64> {
        for (slot, &i) in self.arranged.iter_mut().zip(&self.perm) {
            *slot = self.pooled[i];
        }
        let (x1, x2) = self.arranged.split_at(n2);
        welch_from_arms(x1, x2, floor)
    }

    fn replicate(&mut self, seed: u64, b: u64, a: f64, n2: usize, floor: Option<f64>) -> Result<f64> {
        let mut rng: Stream = rng::stream(seed, b);
        for (k, p) in self.perm.iter_mut().enumerate() {
            *p = k;
        }
        shuffle(&mut self.perm, &mut rng);
        fill_flips(&mut self.flips, &mut rng);
        let (t1, t2) = (
            if a > 0.0 { Some(self.t1(floor)) } else { None },
            if a < 1.0 { Some(self.t2(n2, floor)) } else { None },
        );
        combine(a, || t1.unwrap(), || t2.unwrap())
    }
}

/// Monte Carlo permutation distribution: `B` independent uniform group
/// elements, replicate `b` driven by stream `(seed, b)`.
pub fn mc_permutation_distribution(
    sample: &PartiallyPairedSample,
    config: &PermutationConfig,
) -> Result<PermutationDistribution> {
    if config.replicates == 0 {
        return Err(Error::InvalidParameter("number of replicates B must be >= 1".into()));
    }
    let t_obs = weighted_statistic(sample, config.rule)?;
    let a = complete_weight(sample.n1(), sample.n2(), sample.n3(), config.rule);
    let floor = config.policy.floor();
    let n2 = sample.n2();
    let seed = config.seed;
    let b_total = config.replicates as u64;

    let values: Result<Vec<f64>> = if config.parallel {
        (0..b_total)
            .into_par_iter()
            .map_init(|| Workspace::new(sample), |ws, b| ws.replicate(seed, b, a, n2, floor))
            .collect()
    } else {
        let mut ws = Workspace::new(sample);
        (0..b_total).map(|b| ws.replicate(seed, b, a, n2, floor)).collect()
    };
    Ok(PermutationDistribution {
        t_obs,
        weight: a,
        values: values?,
        exact: false,
    })
}

/// Result of a permutation test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationTestResult {
    pub t_obs: f64,
    pub weight: f64,
    pub side: Side,
    pub alpha: f64,
    /// `#{T_b >= T} / B`
    pub p_one_sided: f64,
    pub p_two_sided: f64,
    /// p-value for `side`.
    pub p_value: f64,
    pub replicates: usize,
    /// `c_p(alpha)`
    pub c_p_alpha: f64,
    /// Present for the exact randomized test only.
    pub gamma_p: Option<f64>,
    pub seed: Option<u64>,
    pub exact: bool,
    pub reject: bool,
}

/// Monte Carlo permutation test.
pub fn mc_permutation_test(
    sample: &PartiallyPairedSample,
    config: &PermutationConfig,
) -> Result<PermutationTestResult> {
    check_alpha(config.alpha)?;
    let dist = mc_permutation_distribution(sample, config)?;
    Ok(summarize_test(&dist, config, Some(config.seed)))
}

fn summarize_test(
    dist: &PermutationDistribution,
    config: &PermutationConfig,
    seed: Option<u64>,
) -> PermutationTestResult {
    let p_value = dist.p_value(config.side, config.two_sided, config.estimator);
    let (c_p_alpha, gamma_p) = if dist.exact {
        (dist.critical_value(config.alpha), Some(dist.gamma(config.alpha)))
    } else {
        (dist.critical_value(config.alpha), None)
    };
    PermutationTestResult {
        t_obs: dist.t_obs,
        weight: dist.weight,
        side: config.side,
        alpha: config.alpha,
        p_one_sided: dist.p_greater(config.estimator),
        p_two_sided: dist.p_two_sided(config.two_sided, config.estimator),
        p_value,
        replicates: dist.len(),
        c_p_alpha,
        gamma_p,
        seed,
        exact: dist.exact,
        reject: p_value <= config.alpha,
    }
}

/// Number of group elements, `2^n1 * (n2 + n3)!`, as a float (it may overflow integers).
pub fn group_size(n1: usize, pooled: usize) -> f64 {
    let fact: f64 = (1..=pooled).map(|k| k as f64).product();
    2f64.powi(n1 as i32) * fact
}

/// Visit every permutation of `0..m` once (Heap's algorithm).
fn for_each_permutation(m: usize, mut visit: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..m).collect();
    let mut c = vec![0usize; m];
    visit(&perm);
    let mut i = 1;
    while i < m {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            visit(&perm);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Full enumeration of the randomization group.
///
/// Replicate `i * (n2+n3)! + j` combines flip pattern `i` (bit `k` of `i`
/// flips pair `k`) with the `j`-th arrangement in Heap order.
pub fn exact_permutation_distribution(
    sample: &PartiallyPairedSample,
    rule: WeightRule,
    policy: DegeneracyPolicy,
    limit: u64,
) -> Result<PermutationDistribution> {
    let (n1, n2, n3) = (sample.n1(), sample.n2(), sample.n3());
    let m = n2 + n3;
    let size = group_size(n1, m);
    if size > limit as f64 || n1 >= 63 {
        return Err(Error::GroupTooLarge { size, limit });
    }
    let t_obs = weighted_statistic(sample, rule)?;
    let a = complete_weight(n1, n2, n3, rule);
    let floor = policy.floor();
    let mut ws = Workspace::new(sample);

    let n_flips = 1usize << n1;
    let t1s: Vec<f64> = if a > 0.0 {
        (0..n_flips)
            .map(|mask| {
                for (k, f) in ws.flips.iter_mut().enumerate() {
                    *f = (mask >> k) & 1 == 1;
                }
                ws.t1(floor)
            })
            .collect::<Result<_>>()?
    } else {
        vec![0.0; n_flips]
    };

    let mut t2s = Vec::new();
    let mut failure = None;
    for_each_permutation(m, |perm| {
        if a < 1.0 {
            ws.perm.copy_from_slice(perm);
            match ws.t2(n2, floor) {
                Ok(v) => t2s.push(v),
                Err(e) => {
                    failure.get_or_insert(e);
                    t2s.push(f64::NAN);
                }
            }
        } else {
            t2s.push(0.0);
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }

    let mut values = Vec::with_capacity(t1s.len() * t2s.len());
    for &t1 in &t1s {
        for &t2 in &t2s {
            values.push(combine(a, || Ok(t1), || Ok(t2))?);
        }
    }
    Ok(PermutationDistribution {
        t_obs,
        weight: a,
        values,
        exact: true,
    })
}

/// Exact randomization test over the whole group.
pub fn exact_permutation_test(
    sample: &PartiallyPairedSample,
    rule: WeightRule,
    alpha: f64,
    side: Side,
    limit: u64,
) -> Result<PermutationTestResult> {
    check_alpha(alpha)?;
    let dist = exact_permutation_distribution(sample, rule, DegeneracyPolicy::Floor, limit)?;
    let config = PermutationConfig {
        rule,
        alpha,
        side,
        ..PermutationConfig::default()
    };
    Ok(summarize_test(&dist, &config, None))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lo: f64,
    pub hi: f64,
    pub alpha: f64,
    pub t_obs: f64,
    pub sw: f64,
    /// `c_p(alpha / 2)`
    pub critical: f64,
}

/// Two-sided interval `[(T -+ c_p(alpha/2)) / S_w]` from a permutation distribution.
pub fn interval_from_distribution(
    dist: &PermutationDistribution,
    sample: &PartiallyPairedSample,
    alpha: f64,
) -> Result<ConfidenceInterval> {
    check_alpha(alpha)?;
    let sw = sw_scale(sample, dist.weight)?;
    let c = dist.critical_value(alpha / 2.0);
    let (x, y) = ((dist.t_obs - c) / sw, (dist.t_obs + c) / sw);
    Ok(ConfidenceInterval {
        lo: x.min(y),
        hi: x.max(y),
        alpha,
        t_obs: dist.t_obs,
        sw,
        critical: c,
    })
}

/// Permutation confidence interval for mu1 - mu2 at level `1 - config.alpha`.
pub fn confidence_interval(sample: &PartiallyPairedSample, config: &PermutationConfig) -> Result<ConfidenceInterval> {
    check_alpha(config.alpha)?;
    let a = complete_weight(sample.n1(), sample.n2(), sample.n3(), config.rule);
    sw_scale(sample, a)?;
    let dist = mc_permutation_distribution(sample, config)?;
    interval_from_distribution(&dist, sample, config.alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TostResult {
    pub epsilon: f64,
    pub alpha: f64,
    /// Lower-tail p-value with every first component shifted by -epsilon
    /// (tests mu1 - mu2 < epsilon).
    pub p_below_upper: f64,
    /// Upper-tail p-value with every first component shifted by +epsilon
    /// (tests mu1 - mu2 > -epsilon).
    pub p_above_lower: f64,
    pub equivalent: bool,
}

impl TostResult {
    pub fn p_value(&self) -> f64 {
        self.p_below_upper.max(self.p_above_lower)
    }
}

/// Permutation TOST for `H0: |mu1 - mu2| >= epsilon` by intersection–union.
/// Both one-sided tests use `config.seed`.
pub fn tost_equivalence_test(
    sample: &PartiallyPairedSample,
    epsilon: f64,
    config: &PermutationConfig,
) -> Result<TostResult> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must be positive")));
    }
    check_alpha(config.alpha)?;
    let lower = sample.map_first(|x| x - epsilon);
    let upper = sample.map_first(|x| x + epsilon);
    let p_below_upper = mc_permutation_distribution(&lower, config)?.p_less(config.estimator);
    let p_above_lower = mc_permutation_distribution(&upper, config)?.p_greater(config.estimator);
    Ok(TostResult {
        epsilon,
        alpha: config.alpha,
        p_below_upper,
        p_above_lower,
        equivalent: p_below_upper.max(p_above_lower) <= config.alpha,
    })
}
