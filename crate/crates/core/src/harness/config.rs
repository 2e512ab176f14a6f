//! Declarative study configuration (TOML).
//!
//! ```toml
//! seed = 20170101
//! alpha = 0.05          # default 0.05
//! nsim = 5000           # default 5000
//! B = 1000              # default 1000
//! methods = ["Tp", "T", "T_LS", "t3"]   # default: all four
//! weight = "paper"      # paper | prop | fixed=<a>
//!
//! [[grid]]
//! marginal = ["normal", "asymmetric_laplace"]
//! al_kappa = 2.0        # optional
//! covariance = ["sigma1", "sigma2", { sigma1_sq = 1.0, sigma2_sq = 4.0 }]
//! rho = [-0.5, 0.0, 0.5, 0.9]
//! sizes = [[10, 10, 10], [30, 10, 10]]
//! delta = [0.0, 0.5, 1.0]
//! mu1 = 0.0             # optional
//! ```
//!
//! Every list-valued key also accepts a single value. Each `[[grid]]` block
//! expands to the cartesian product, ordered marginal, covariance, sizes,
//! rho, delta (last varies fastest).

use super::{Method, StudyGrid};
use crate::error::{Error, Result};
use crate::lab::{CovarianceSpec, Marginal, ScenarioConfig, DEFAULT_AL_KAPPA};
use crate::statistics::WeightRule;
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(x) => vec![x.clone()],
            OneOrMany::Many(xs) => xs.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum CovarianceEntry {
    Named(String),
    Explicit { sigma1_sq: f64, sigma2_sq: f64 },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridBlock {
    marginal: OneOrMany<String>,
    #[serde(default)]
    al_kappa: Option<f64>,
    covariance: OneOrMany<CovarianceEntry>,
    rho: OneOrMany<f64>,
    sizes: OneOrMany<[usize; 3]>,
    #[serde(default)]
    delta: Option<OneOrMany<f64>>,
    #[serde(default)]
    mu1: Option<f64>,
}

/// Raw file contents before expansion.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfigFile {
    seed: u64,
    #[serde(default)]
    alpha: Option<f64>,
    #[serde(default)]
    nsim: Option<usize>,
    #[serde(default, rename = "B")]
    replicates: Option<usize>,
    #[serde(default)]
    methods: Option<Vec<String>>,
    #[serde(default)]
    weight: Option<String>,
    grid: Vec<GridBlock>,
}

fn marginal(name: &str, kappa: Option<f64>) -> Result<Marginal> {
    match name {
        "normal" => Ok(Marginal::Normal),
        "exponential" => Ok(Marginal::Exponential),
        "laplace" => Ok(Marginal::Laplace),
        "asymmetric_laplace" => Ok(Marginal::AsymmetricLaplace {
            kappa: kappa.unwrap_or(DEFAULT_AL_KAPPA),
        }),
        other => Err(Error::Config(format!("unknown marginal {other:?}"))),
    }
}

fn covariance(entry: &CovarianceEntry, rho: f64) -> Result<CovarianceSpec> {
    match entry {
        CovarianceEntry::Named(n) if n == "sigma1" => CovarianceSpec::homoscedastic(rho),
        CovarianceEntry::Named(n) if n == "sigma2" => CovarianceSpec::heteroscedastic(rho),
        CovarianceEntry::Named(n) => Err(Error::Config(format!("unknown covariance {n:?}"))),
        CovarianceEntry::Explicit { sigma1_sq, sigma2_sq } => CovarianceSpec::new(*sigma1_sq, *sigma2_sq, rho),
    }
}

impl StudyConfigFile {
    pub fn into_grid(self) -> Result<StudyGrid> {
        let methods = match &self.methods {
            None => Method::ALL.to_vec(),
            Some(ms) => ms.iter().map(|m| m.parse()).collect::<Result<_>>()?,
        };
        let rule = match &self.weight {
            None => WeightRule::default(),
            Some(w) => w.parse()?,
        };
        let mut scenarios = Vec::new();
        for block in &self.grid {
            let deltas = block.delta.as_ref().map(|d| d.to_vec()).unwrap_or_else(|| vec![0.0]);
            for m in block.marginal.to_vec() {
                let m = marginal(&m, block.al_kappa)?;
                for cov in block.covariance.to_vec() {
                    for [n1, n2, n3] in block.sizes.to_vec() {
                        for rho in block.rho.to_vec() {
                            for &delta in &deltas {
                                scenarios.push(ScenarioConfig {
                                    marginal: m,
                                    covariance: covariance(&cov, rho)?,
                                    n1,
                                    n2,
                                    n3,
                                    mu1: block.mu1.unwrap_or(0.0),
                                    delta,
                                });
                            }
                        }
                    }
                }
            }
        }
        if scenarios.is_empty() {
            return Err(Error::Config("grid expands to no scenarios".into()));
        }
        let grid = StudyGrid {
            scenarios,
            methods,
            alpha: self.alpha.unwrap_or(0.05),
            nsim: self.nsim.unwrap_or(5000),
            replicates: self.replicates.unwrap_or(1000),
            seed: self.seed,
            rule,
        };
        grid.validate()?;
        Ok(grid)
    }
}

/// Parse and expand a study configuration.
pub fn parse_study_config(text: &str) -> Result<StudyGrid> {
    let file: StudyConfigFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    file.into_grid()
}
