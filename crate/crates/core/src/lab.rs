//! Data generators for simulation studies.
//!
//! Complete pairs are `R (e1, e2)' + (mu1, mu2)'` where `R` is the symmetric
//! square root of the covariance matrix and `e1`, `e2` are independent
//! standardized errors. Incomplete observations are `sigma_i * e + mu_i`.
//! The second-arm mean is `mu1 + delta` everywhere.

use crate::error::{Error, Result};
use crate::sample::PartiallyPairedSample;
use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

pub const DEFAULT_AL_KAPPA: f64 = 2.0;

/// 2x2 covariance matrix given by two variances and a correlation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    pub sigma1_sq: f64,
    pub sigma2_sq: f64,
    pub rho: f64,
}

impl CovarianceSpec {
    pub fn new(sigma1_sq: f64, sigma2_sq: f64, rho: f64) -> Result<Self> {
        let spec = Self {
            sigma1_sq,
            sigma2_sq,
            rho,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Unit variances, correlation `rho`.
    pub fn homoscedastic(rho: f64) -> Result<Self> {
        Self::new(1.0, 1.0, rho)
    }

    /// Variances 1 and 2, covariance `sqrt(2) * rho`.
    pub fn heteroscedastic(rho: f64) -> Result<Self> {
        Self::new(1.0, 2.0, rho)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.sigma1_sq > 0.0
            && self.sigma2_sq > 0.0
            && self.sigma1_sq.is_finite()
            && self.sigma2_sq.is_finite()
            && self.rho > -1.0
            && self.rho < 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::NotPositiveDefinite(format!(
                "sigma1^2 = {}, sigma2^2 = {}, rho = {}",
                self.sigma1_sq, self.sigma2_sq, self.rho
            )))
        }
    }

    pub fn covariance(&self) -> f64 {
        self.rho * (self.sigma1_sq * self.sigma2_sq).sqrt()
    }

    pub fn matrix(&self) -> [[f64; 2]; 2] {
        let c = self.covariance();
        [[self.sigma1_sq, c], [c, self.sigma2_sq]]
    }
}

/// Symmetric positive-definite square root `R` with `R R = Sigma`.
///
/// For a 2x2 SPD matrix with `s = sqrt(det)` and `t = sqrt(trace + 2 s)`
/// the root is `(Sigma + s I) / t`, the same matrix the eigen-decomposition
/// `V diag(sqrt(lambda)) V'` produces.
pub fn matrix_sqrt_2x2(spec: &CovarianceSpec) -> Result<[[f64; 2]; 2]> {
    spec.validate()?;
    let [[a, b], [_, c]] = spec.matrix();
    let det = a * c - b * b;
    if det <= 0.0 {
        return Err(Error::NotPositiveDefinite(format!("determinant {det}")));
    }
    let s = det.sqrt();
    let t = (a + c + 2.0 * s).sqrt();
    Ok([[(a + s) / t, b / t], [b / t, (c + s) / t]])
}

/// Error distribution before standardization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Marginal {
    Normal,
    /// Rate 1.
    Exponential,
    /// Location 0, scale 1.
    Laplace,
    /// Unit rate, asymmetry `kappa`: `E1 / kappa - kappa * E2` with `E1`, `E2` standard exponential.
    AsymmetricLaplace {
        kappa: f64,
    },
}

impl Marginal {
    pub fn asymmetric_laplace() -> Self {
        Marginal::AsymmetricLaplace {
            kappa: DEFAULT_AL_KAPPA,
        }
    }

    /// Analytic mean and standard deviation of the raw draw.
    pub fn moments(&self) -> (f64, f64) {
        match *self {
            Marginal::Normal => (0.0, 1.0),
            Marginal::Exponential => (1.0, 1.0),
            Marginal::Laplace => (0.0, std::f64::consts::SQRT_2),
            Marginal::AsymmetricLaplace { kappa } => {
                (1.0 / kappa - kappa, (1.0 / (kappa * kappa) + kappa * kappa).sqrt())
            }
        }
    }

    pub fn name(&self) -> String {
        match *self {
            Marginal::Normal => "normal".into(),
            Marginal::Exponential => "exponential".into(),
            Marginal::Laplace => "laplace".into(),
            Marginal::AsymmetricLaplace { kappa } => format!("asymmetric_laplace(kappa={kappa})"),
        }
    }

    fn raw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Marginal::Normal => rng.sample(StandardNormal),
            Marginal::Exponential => rng.sample(Exp1),
            Marginal::Laplace => {
                let e1: f64 = rng.sample(Exp1);
                let e2: f64 = rng.sample(Exp1);
                e1 - e2
            }
            Marginal::AsymmetricLaplace { kappa } => {
                let e1: f64 = rng.sample(Exp1);
                let e2: f64 = rng.sample(Exp1);
                e1 / kappa - kappa * e2
            }
        }
    }
}

/// One draw with population mean 0 and variance 1.
pub fn standardized_error<R: Rng + ?Sized>(marginal: Marginal, rng: &mut R) -> f64 {
    let (m, sd) = marginal.moments();
    (marginal.raw(rng) - m) / sd
}

/// One simulation scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub marginal: Marginal,
    pub covariance: CovarianceSpec,
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    pub mu1: f64,
    /// Added to the second-component mean.
    pub delta: f64,
}

impl ScenarioConfig {
    pub fn mu2(&self) -> f64 {
        self.mu1 + self.delta
    }

    pub fn validate(&self) -> Result<()> {
        self.covariance.validate()?;
        if let Marginal::AsymmetricLaplace { kappa } = self.marginal {
            if !(kappa > 0.0 && kappa.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "asymmetric Laplace kappa {kappa} must be positive"
                )));
            }
        }
        if !(self.mu1.is_finite() && self.delta.is_finite()) {
            return Err(Error::InvalidParameter("mu1 and delta must be finite".into()));
        }
        Ok(())
    }
}

/// Draw a sample with fixed counts: n1 mixed pairs, then n2 first-arm and
/// n3 second-arm singletons, in that order from `rng`.
pub fn generate_sample<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<PartiallyPairedSample> {
    config.validate()?;
    let root = matrix_sqrt_2x2(&config.covariance)?;
    let (mu1, mu2) = (config.mu1, config.mu2());
    let complete = (0..config.n1)
        .map(|_| {
            let e1 = standardized_error(config.marginal, rng);
            let e2 = standardized_error(config.marginal, rng);
            (
                root[0][0] * e1 + root[0][1] * e2 + mu1,
                root[1][0] * e1 + root[1][1] * e2 + mu2,
            )
        })
        .collect();
    let s1 = config.covariance.sigma1_sq.sqrt();
    let s2 = config.covariance.sigma2_sq.sqrt();
    let first_only = (0..config.n2)
        .map(|_| s1 * standardized_error(config.marginal, rng) + mu1)
        .collect();
    let second_only = (0..config.n3)
        .map(|_| s2 * standardized_error(config.marginal, rng) + mu2)
        .collect();
    PartiallyPairedSample::new(complete, first_only, second_only)
}

/// Alternative missingness: draw `n` mixed pairs and delete each component
/// independently with probability `p_missing`. Subjects losing both
/// components are dropped.
pub fn generate_bernoulli_sample<R: Rng + ?Sized>(
    marginal: Marginal,
    covariance: &CovarianceSpec,
    mu1: f64,
    delta: f64,
    n: usize,
    p_missing: f64,
    rng: &mut R,
) -> Result<PartiallyPairedSample> {
    if !(0.0..1.0).contains(&p_missing) {
        return Err(Error::InvalidParameter(format!(
            "missing probability {p_missing} outside [0, 1)"
        )));
    }
    let root = matrix_sqrt_2x2(covariance)?;
    let mu2 = mu1 + delta;
    let mut records = Vec::with_capacity(n);
    for _ in 0..n {
        let e1 = standardized_error(marginal, rng);
        let e2 = standardized_error(marginal, rng);
        let x1 = root[0][0] * e1 + root[0][1] * e2 + mu1;
        let x2 = root[1][0] * e1 + root[1][1] * e2 + mu2;
        let keep1 = rng.random::<f64>() >= p_missing;
        let keep2 = rng.random::<f64>() >= p_missing;
        if keep1 || keep2 {
            records.push((keep1.then_some(x1), keep2.then_some(x2)));
        }
    }
    PartiallyPairedSample::from_records(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn max_err(r: [[f64; 2]; 2], sigma: [[f64; 2]; 2]) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                let rr = r[i][0] * r[0][j] + r[i][1] * r[1][j];
                m = m.max((rr - sigma[i][j]).abs());
            }
        }
        m
    }

    #[test]
    fn identity_root() {
        let spec = CovarianceSpec::homoscedastic(0.0).unwrap();
        assert_eq!(matrix_sqrt_2x2(&spec).unwrap(), [[1.0, 0.0], [0.0, 1.0]]);
    }

    #[test]
    fn near_singular_root() {
        let spec = CovarianceSpec::homoscedastic(1.0 - 1e-9).unwrap();
        let r = matrix_sqrt_2x2(&spec).unwrap();
        assert!(max_err(r, spec.matrix()) <= 1e-12);
        assert!((r[0][1] - r[0][0]).abs() < 1e-4);
    }

    #[test]
    fn rejects_invalid_covariance() {
        assert!(CovarianceSpec::new(1.0, 1.0, 1.0).is_err());
        assert!(CovarianceSpec::new(0.0, 1.0, 0.0).is_err());
        assert!(CovarianceSpec::new(1.0, -2.0, 0.0).is_err());
    }

    #[test]
    fn exponential_support() {
        let mut rng = stream(1, 0);
        for _ in 0..10_000 {
            assert!(standardized_error(Marginal::Exponential, &mut rng) > -1.0);
        }
    }

    #[test]
    fn purely_paired_when_no_singletons() {
        let cfg = ScenarioConfig {
            marginal: Marginal::Normal,
            covariance: CovarianceSpec::homoscedastic(0.3).unwrap(),
            n1: 7,
            n2: 0,
            n3: 0,
            mu1: 0.0,
            delta: 0.0,
        };
        let s = generate_sample(&cfg, &mut stream(2, 0)).unwrap();
        assert_eq!((s.n1(), s.n2(), s.n3()), (7, 0, 0));
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = ScenarioConfig {
            marginal: Marginal::asymmetric_laplace(),
            covariance: CovarianceSpec::heteroscedastic(0.5).unwrap(),
            n1: 5,
            n2: 4,
            n3: 3,
            mu1: 1.0,
            delta: 0.5,
        };
        let a = generate_sample(&cfg, &mut stream(3, 9)).unwrap();
        let b = generate_sample(&cfg, &mut stream(3, 9)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn bernoulli_missingness() {
        let spec = CovarianceSpec::homoscedastic(0.2).unwrap();
        let s = generate_bernoulli_sample(Marginal::Normal, &spec, 0.0, 0.0, 20_000, 0.3, &mut stream(4, 0)).unwrap();
        // expected fractions among retained subjects: .49/.91, .21/.91, .21/.91
        let kept = s.n() as f64;
        assert!((kept / 20_000.0 - 0.91).abs() < 0.01);
        assert!((s.n1() as f64 / kept - 0.49 / 0.91).abs() < 0.015);
        assert!((s.n2() as f64 / kept - 0.21 / 0.91).abs() < 0.015);
        assert!(generate_bernoulli_sample(Marginal::Normal, &spec, 0.0, 0.0, 5, 1.0, &mut stream(4, 0)).is_err());
    }
}
