//! Partially paired data: complete pairs plus the two arms of unpaired observations.

use crate::error::{Error, Result};

/// Observations sorted into complete pairs and the two incomplete arms.
///
/// Values are always finite; construction through [`PartiallyPairedSample::new`]
/// or [`PartiallyPairedSample::from_records`] enforces it.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PartiallyPairedSample {
    complete: Vec<(f64, f64)>,
    first_only: Vec<f64>,
    second_only: Vec<f64>,
}

impl PartiallyPairedSample {
    pub fn new(complete: Vec<(f64, f64)>, first_only: Vec<f64>, second_only: Vec<f64>) -> Result<Self> {
        let flat = complete
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .chain(first_only.iter().copied())
            .chain(second_only.iter().copied());
        for (index, value) in flat.enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFiniteValue { index, value });
            }
        }
        Ok(Self {
            complete,
            first_only,
            second_only,
        })
    }

    /// Partition raw records, keeping input order within each container.
    pub fn from_records<I>(records: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Option<f64>, Option<f64>)>,
    {
        let mut sample = Self::default();
        for (index, record) in records.into_iter().enumerate() {
            for v in [record.0, record.1].into_iter().flatten() {
                if !v.is_finite() {
                    return Err(Error::NonFiniteValue { index, value: v });
                }
            }
            match record {
                (Some(a), Some(b)) => sample.complete.push((a, b)),
                (Some(a), None) => sample.first_only.push(a),
                (None, Some(b)) => sample.second_only.push(b),
                (None, None) => return Err(Error::RecordBothMissing { index }),
            }
        }
        Ok(sample)
    }

    pub fn complete(&self) -> &[(f64, f64)] {
        &self.complete
    }

    pub fn first_only(&self) -> &[f64] {
        &self.first_only
    }

    pub fn second_only(&self) -> &[f64] {
        &self.second_only
    }

    pub fn n1(&self) -> usize {
        self.complete.len()
    }

    pub fn n2(&self) -> usize {
        self.first_only.len()
    }

    pub fn n3(&self) -> usize {
        self.second_only.len()
    }

    /// Total number of subjects, n1 + n2 + n3.
    pub fn n(&self) -> usize {
        self.n1() + self.n2() + self.n3()
    }

    /// The incomplete observations pooled as first arm followed by second arm.
    pub fn pooled_incomplete(&self) -> Vec<f64> {
        let mut z = Vec::with_capacity(self.n2() + self.n3());
        z.extend_from_slice(&self.first_only);
        z.extend_from_slice(&self.second_only);
        z
    }

    /// Differences x1 - x2 of the complete pairs.
    pub fn differences(&self) -> Vec<f64> {
        self.complete.iter().map(|&(a, b)| a - b).collect()
    }

    /// Apply `f` to the first component of every observation (complete and first-only).
    pub fn map_first(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            complete: self.complete.iter().map(|&(a, b)| (f(a), b)).collect(),
            first_only: self.first_only.iter().map(|&a| f(a)).collect(),
            second_only: self.second_only.clone(),
        }
    }

    /// Apply `f` to every observed value.
    pub fn map_all(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            complete: self.complete.iter().map(|&(a, b)| (f(a), f(b))).collect(),
            first_only: self.first_only.iter().map(|&a| f(a)).collect(),
            second_only: self.second_only.iter().map(|&b| f(b)).collect(),
        }
    }

    /// Swap the components of every pair and exchange the two incomplete arms.
    pub fn swap_arms(&self) -> Self {
        Self {
            complete: self.complete.iter().map(|&(a, b)| (b, a)).collect(),
            first_only: self.second_only.clone(),
            second_only: self.first_only.clone(),
        }
    }

    pub(crate) fn from_parts_unchecked(complete: Vec<(f64, f64)>, first_only: Vec<f64>, second_only: Vec<f64>) -> Self {
        Self {
            complete,
            first_only,
            second_only,
        }
    }
}

/// Descriptive summary of a sample. Entries needing more data than is
/// available are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSummary {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub mean_d: Option<f64>,
    pub var_d: Option<f64>,
    pub mean1_i: Option<f64>,
    pub var1_i: Option<f64>,
    pub mean2_i: Option<f64>,
    pub var2_i: Option<f64>,
    /// Pearson correlation of the complete pairs.
    pub r: Option<f64>,
    /// Arm means over paired and unpaired observations together.
    pub mean1_ci: Option<f64>,
    pub mean2_ci: Option<f64>,
}

pub fn summarize(sample: &PartiallyPairedSample) -> SampleSummary {
    let d = sample.differences();
    let first_all: Vec<f64> = sample
        .complete()
        .iter()
        .map(|p| p.0)
        .chain(sample.first_only().iter().copied())
        .collect();
    let second_all: Vec<f64> = sample
        .complete()
        .iter()
        .map(|p| p.1)
        .chain(sample.second_only().iter().copied())
        .collect();
    SampleSummary {
        n1: sample.n1(),
        n2: sample.n2(),
        n3: sample.n3(),
        mean_d: mean(&d),
        var_d: variance(&d),
        mean1_i: mean(sample.first_only()),
        var1_i: variance(sample.first_only()),
        mean2_i: mean(sample.second_only()),
        var2_i: variance(sample.second_only()),
        r: pearson(sample.complete()),
        mean1_ci: mean(&first_all),
        mean2_ci: mean(&second_all),
    }
}

pub(crate) fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

/// Unbiased (n - 1) variance, two-pass.
pub(crate) fn variance(xs: &[f64]) -> Option<f64> {
    mean_var(xs).map(|(_, v)| v)
}

pub(crate) fn mean_var(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.len() < 2 {
        return None;
    }
    let m = xs.iter().sum::<f64>() / xs.len() as f64;
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    Some((m, ss / (xs.len() - 1) as f64))
}

pub(crate) fn pearson(pairs: &[(f64, f64)]) -> Option<f64> {
    if pairs.len() < 2 {
        return None;
    }
    let n = pairs.len() as f64;
    let m1 = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let m2 = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut s11, mut s22, mut s12) = (0.0, 0.0, 0.0);
    for &(a, b) in pairs {
        s11 += (a - m1) * (a - m1);
        s22 += (b - m2) * (b - m2);
        s12 += (a - m1) * (b - m2);
    }
    if s11 <= 0.0 || s22 <= 0.0 {
        return None;
    }
    Some((s12 / (s11 * s22).sqrt()).clamp(-1.0, 1.0))
}
