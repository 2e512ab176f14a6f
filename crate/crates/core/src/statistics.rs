//! Closed-form test statistics for partially paired data.
//!
//! The weighted statistic combines the paired t statistic of the complete
//! pairs with the Welch statistic of the two incomplete arms:
//! `T = sqrt(a) * T1 + sqrt(1 - a) * T2`. Two literature competitors are
//! provided for comparison: the Lin–Stivers mean-difference statistic
//! (Student t reference, n - 4 df) and Kim's `t3` (normal reference).
//!
//! Note on the Lin–Stivers sums of squares: `S1²` collects first-component
//! deviations of complete and first-only observations around the combined
//! first-arm mean, while `S2²` only collects second-only deviations around
//! their own mean. This asymmetric form is what is implemented, so the
//! statistic is not exactly antisymmetric under swapping the arms.
//! Likewise the `S_w` scale adds the two incomplete-arm standard errors
//! rather than combining them in quadrature.

use crate::error::{Error, Result};
use crate::reference::{normal_quantile, normal_sf, student_t_sf};
use crate::sample::{mean, mean_var, pearson, PartiallyPairedSample};
use serde::{Deserialize, Serialize};

/// Alternative hypothesis. `Greater` is mu1 > mu2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Greater,
    Less,
    TwoSided,
}

/// How much weight the complete pairs get in the combined statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum WeightRule {
    /// a = 2 n1 / (n + n1)
    #[default]
    TwoN1OverNPlusN1,
    /// a = n1 / n
    N1OverN,
    Fixed(f64),
}

impl WeightRule {
    pub fn fixed(a: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&a) {
            Ok(WeightRule::Fixed(a))
        } else {
            Err(Error::InvalidParameter(format!("fixed weight {a} outside [0, 1]")))
        }
    }
}

impl std::str::FromStr for WeightRule {
    type Err = Error;

    /// `paper` (2 n1 / (n + n1)), `prop` (n1 / n) or `fixed=<a>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "paper" => Ok(WeightRule::TwoN1OverNPlusN1),
            "prop" => Ok(WeightRule::N1OverN),
            other => match other.strip_prefix("fixed=") {
                Some(a) => {
                    let a: f64 = a.parse().map_err(|_| Error::Parse(format!("bad fixed weight {a:?}")))?;
                    WeightRule::fixed(a)
                }
                None => Err(Error::Parse(format!(
                    "unknown weight rule {other:?} (expected paper, prop or fixed=<a>)"
                ))),
            },
        }
    }
}

/// Weight `a` in [0, 1] given to the complete pairs.
pub fn complete_weight(n1: usize, n2: usize, n3: usize, rule: WeightRule) -> f64 {
    let n = (n1 + n2 + n3) as f64;
    let n1f = n1 as f64;
    let a = match rule {
        WeightRule::TwoN1OverNPlusN1 => 2.0 * n1f / (n + n1f),
        WeightRule::N1OverN => n1f / n,
        WeightRule::Fixed(a) => a,
    };
    if a.is_nan() {
        0.0
    } else {
        a.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reference {
    StandardNormal,
    StudentT { df: f64 },
}

/// A statistic together with the distribution it is referred to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatisticValue {
    pub value: f64,
    pub reference: Reference,
}

impl StatisticValue {
    pub fn df(&self) -> Option<f64> {
        match self.reference {
            Reference::StandardNormal => None,
            Reference::StudentT { df } => Some(df),
        }
    }
}

/// Paired t statistic of the complete pairs, `mean(D) / sqrt(var(D) / n1)`.
pub fn paired_t_statistic(sample: &PartiallyPairedSample) -> Result<f64> {
    let d = sample.differences();
    paired_t_from_differences(&d, None)
}

/// Welch statistic of the incomplete arms.
pub fn welch_statistic(sample: &PartiallyPairedSample) -> Result<f64> {
    welch_from_arms(sample.first_only(), sample.second_only(), None)
}

/// `sqrt(a) * T1 + sqrt(1 - a) * T2` with `a` from `rule`.
///
/// A component with zero weight is not evaluated, so `a = 1` works on fully
/// paired data and `a = 0` on data without complete pairs.
pub fn weighted_statistic(sample: &PartiallyPairedSample, rule: WeightRule) -> Result<f64> {
    let a = complete_weight(sample.n1(), sample.n2(), sample.n3(), rule);
    combine(a, || paired_t_statistic(sample), || welch_statistic(sample))
}

pub(crate) fn combine(a: f64, t1: impl FnOnce() -> Result<f64>, t2: impl FnOnce() -> Result<f64>) -> Result<f64> {
    if a >= 1.0 {
        t1()
    } else if a <= 0.0 {
        t2()
    } else {
        Ok(a.sqrt() * t1()? + (1.0 - a).sqrt() * t2()?)
    }
}

/// Paired t on a vector of differences. With `floor`, a zero variance is
/// replaced by the floor instead of failing.
pub(crate) fn paired_t_from_differences(d: &[f64], floor: Option<f64>) -> Result<f64> {
    let n1 = d.len();
    let (m, v) = mean_var(d).ok_or(Error::TooFewCompletePairs { n1 })?;
    let var_mean = v / n1 as f64;
    let var_mean = match floor {
        Some(f) => var_mean.max(f),
        None if var_mean > 0.0 => var_mean,
        None => return Err(Error::DegenerateVariance("paired differences")),
    };
    Ok(m / var_mean.sqrt())
}

pub(crate) fn welch_from_arms(x1: &[f64], x2: &[f64], floor: Option<f64>) -> Result<f64> {
    let too_few = Error::TooFewIncomplete {
        n2: x1.len(),
        n3: x2.len(),
    };
    let (m1, v1) = mean_var(x1).ok_or_else(|| too_few.clone())?;
    let (m2, v2) = mean_var(x2).ok_or(too_few)?;
    let se2 = v1 / x1.len() as f64 + v2 / x2.len() as f64;
    let se2 = match floor {
        Some(f) => se2.max(f),
        None if se2 > 0.0 => se2,
        None => return Err(Error::DegenerateVariance("incomplete arms")),
    };
    Ok((m1 - m2) / se2.sqrt())
}

/// Lin–Stivers studentized mean difference, referred to t with n - 4 df.
pub fn lin_stivers_statistic(sample: &PartiallyPairedSample) -> Result<StatisticValue> {
    const NAME: &str = "lin-stivers";
    let (n1, n2, n3) = (sample.n1(), sample.n2(), sample.n3());
    let n = sample.n();
    if n1 < 2 {
        return Err(Error::TooFewObservations {
            statistic: NAME,
            reason: format!("needs n1 >= 2 complete pairs for the correlation, got {n1}"),
        });
    }
    if n < 5 {
        return Err(Error::TooFewObservations {
            statistic: NAME,
            reason: format!("needs n >= 5 so that n - 4 > 0, got {n}"),
        });
    }
    let r = pearson(sample.complete()).ok_or(Error::DegenerateDenominator(
        "lin-stivers (correlation of complete pairs undefined)",
    ))?;

    let first: Vec<f64> = sample
        .complete()
        .iter()
        .map(|p| p.0)
        .chain(sample.first_only().iter().copied())
        .collect();
    let second: Vec<f64> = sample
        .complete()
        .iter()
        .map(|p| p.1)
        .chain(sample.second_only().iter().copied())
        .collect();
    let m1 = mean(&first).expect("n1 >= 2");
    let m2 = mean(&second).expect("n1 >= 2");

    let s1_sq: f64 = first.iter().map(|x| (x - m1) * (x - m1)).sum();
    let s2_sq: f64 = match mean(sample.second_only()) {
        Some(m2i) => sample.second_only().iter().map(|x| (x - m2i) * (x - m2i)).sum(),
        None => 0.0,
    };

    let (a, b, c) = ((n2 + n1) as f64, (n3 + n1) as f64, n1 as f64);
    let design = 1.0 / a + 1.0 / b - 2.0 * c * r / (a * b);
    let spread = (s1_sq + s2_sq) / (n - 2) as f64;
    let denom = design.max(0.0).sqrt() * spread.sqrt();
    if denom <= 0.0 || !denom.is_finite() {
        return Err(Error::DegenerateDenominator(NAME));
    }
    Ok(StatisticValue {
        value: (m1 - m2) / denom,
        reference: Reference::StudentT { df: (n - 4) as f64 },
    })
}

/// Harmonic mean of the incomplete arm sizes.
pub fn harmonic_mean_size(n2: usize, n3: usize) -> f64 {
    2.0 / (1.0 / n2 as f64 + 1.0 / n3 as f64)
}

/// Kim et al.'s `t3`, referred to the standard normal.
pub fn kim_t3_statistic(sample: &PartiallyPairedSample) -> Result<StatisticValue> {
    const NAME: &str = "kim t3";
    let (n1, n2, n3) = (sample.n1(), sample.n2(), sample.n3());
    if n1 < 2 || n2 < 2 || n3 < 2 {
        return Err(Error::TooFewObservations {
            statistic: NAME,
            reason: format!("needs n1, n2, n3 >= 2, got ({n1}, {n2}, {n3})"),
        });
    }
    let (mean_d, var_d) = mean_var(&sample.differences()).expect("n1 >= 2");
    let (m1, v1) = mean_var(sample.first_only()).expect("n2 >= 2");
    let (m2, v2) = mean_var(sample.second_only()).expect("n3 >= 2");
    let nh = harmonic_mean_size(n2, n3);
    let n1f = n1 as f64;
    // mean of differences equals the difference of complete-arm means
    let num = n1f * mean_d + nh * (m1 - m2);
    let den2 = n1f * var_d + nh * nh * (v1 / n2 as f64 + v2 / n3 as f64);
    if den2 <= 0.0 || !den2.is_finite() {
        return Err(Error::DegenerateDenominator(NAME));
    }
    Ok(StatisticValue {
        value: num / den2.sqrt(),
        reference: Reference::StandardNormal,
    })
}

/// Scale `S_w` that turns the weighted statistic into the mean-difference scale.
pub fn sw_scale(sample: &PartiallyPairedSample, a: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::InvalidParameter(format!("weight {a} outside [0, 1]")));
    }
    let mut sw = 0.0;
    if a > 0.0 {
        let n1 = sample.n1();
        let (_, v) = mean_var(&sample.differences()).ok_or(Error::TooFewCompletePairs { n1 })?;
        if v <= 0.0 {
            return Err(Error::DegenerateVariance("paired differences"));
        }
        sw += a.sqrt() / (v.sqrt() / (n1 as f64).sqrt());
    }
    if a < 1.0 {
        let (n2, n3) = (sample.n2(), sample.n3());
        let too_few = Error::TooFewIncomplete { n2, n3 };
        let (_, v1) = mean_var(sample.first_only()).ok_or_else(|| too_few.clone())?;
        let (_, v2) = mean_var(sample.second_only()).ok_or(too_few)?;
        if v1 <= 0.0 || v2 <= 0.0 {
            return Err(Error::DegenerateVariance("incomplete arms"));
        }
        sw += (1.0 - a).sqrt() / (v1.sqrt() / (n2 as f64).sqrt() + v2.sqrt() / (n3 as f64).sqrt());
    }
    Ok(sw)
}

/// Result of a test against a closed-form reference distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: StatisticValue,
    pub side: Side,
    pub alpha: f64,
    pub p_one_sided: f64,
    pub p_two_sided: f64,
    /// p-value for `side`.
    pub p_value: f64,
    pub reject: bool,
}

impl TestOutcome {
    fn new(statistic: StatisticValue, side: Side, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let p_one_sided = reference_p_value(&statistic, Side::Greater);
        let p_two_sided = reference_p_value(&statistic, Side::TwoSided);
        let p_value = reference_p_value(&statistic, side);
        Ok(Self {
            statistic,
            side,
            alpha,
            p_one_sided,
            p_two_sided,
            p_value,
            reject: p_value < alpha,
        })
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha = {alpha} outside (0, 1)")))
    }
}

/// Asymptotic test of the weighted statistic against N(0, 1).
///
/// One-sided rejects iff `T > z_{1-alpha}`; two-sided iff `|T| > z_{1-alpha/2}`.
pub fn asymptotic_test(
    sample: &PartiallyPairedSample,
    rule: WeightRule,
    alpha: f64,
    side: Side,
) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    let t = weighted_statistic(sample, rule)?;
    let stat = StatisticValue {
        value: t,
        reference: Reference::StandardNormal,
    };
    let mut out = TestOutcome::new(stat, side, alpha)?;
    out.reject = match side {
        Side::Greater => t > normal_quantile(1.0 - alpha),
        Side::Less => t < normal_quantile(alpha),
        Side::TwoSided => t.abs() > normal_quantile(1.0 - alpha / 2.0),
    };
    Ok(out)
}

pub fn lin_stivers_test(sample: &PartiallyPairedSample, alpha: f64, side: Side) -> Result<TestOutcome> {
    TestOutcome::new(lin_stivers_statistic(sample)?, side, alpha)
}

pub fn kim_t3_test(sample: &PartiallyPairedSample, alpha: f64, side: Side) -> Result<TestOutcome> {
    TestOutcome::new(kim_t3_statistic(sample)?, side, alpha)
}

/// Tail probability of `stat` under its reference distribution.
pub fn reference_p_value(stat: &StatisticValue, side: Side) -> f64 {
    let sf = |x: f64| match stat.reference {
        Reference::StandardNormal => normal_sf(x),
        Reference::StudentT { df } => student_t_sf(x, df),
    };
    let v = stat.value;
    match side {
        Side::Greater => sf(v),
        Side::Less => sf(-v),
        Side::TwoSided => (2.0 * sf(v.abs())).min(1.0),
    }
}
