//! Monte Carlo rejection-rate studies over grids of scenarios.
//!
//! Each (scenario, method) cell draws its datasets from a seed derived from
//! the master seed, a hash of the scenario and the method, so cells are
//! independent of each other and of grid order. Simulation `i` of a cell
//! generates data from stream `i` of the cell key; the permutation test on
//! that dataset uses its own key derived from the cell key and `i`.

mod config;
mod table;

pub use config::{parse_study_config, StudyConfigFile};
pub use table::{emit_plot_data, emit_timing, parse_plot_data, PLOT_COLUMNS};

use crate::error::{Error, Result};
use crate::lab::{generate_sample, Marginal, ScenarioConfig};
use crate::randomization::{mc_permutation_distribution, PermutationConfig};
use crate::rng::{derive_seed, stream};
use crate::sample::PartiallyPairedSample;
use crate::statistics::{asymptotic_test, kim_t3_test, lin_stivers_test, Side, WeightRule};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

/// Tests compared in a study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Studentized randomization test.
    Tp,
    /// Weighted statistic against N(0, 1).
    TAsymptotic,
    /// Lin–Stivers against t(n - 4).
    TLinStivers,
    /// Kim's t3 against N(0, 1).
    KimT3,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Tp, Method::TAsymptotic, Method::TLinStivers, Method::KimT3];

    pub fn label(&self) -> &'static str {
        match self {
            Method::Tp => "Tp",
            Method::TAsymptotic => "T",
            Method::TLinStivers => "T_LS",
            Method::KimT3 => "t3",
        }
    }

    fn id(&self) -> u64 {
        match self {
            Method::Tp => 1,
            Method::TAsymptotic => 2,
            Method::TLinStivers => 3,
            Method::KimT3 => 4,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "Tp" | "perm" => Ok(Method::Tp),
            "T" | "asymptotic" => Ok(Method::TAsymptotic),
            "T_LS" | "lin-stivers" => Ok(Method::TLinStivers),
            "t3" | "kim" => Ok(Method::KimT3),
            other => Err(Error::Parse(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyGrid {
    pub scenarios: Vec<ScenarioConfig>,
    pub methods: Vec<Method>,
    pub alpha: f64,
    pub nsim: usize,
    /// Permutation replicates B per dataset.
    pub replicates: usize,
    pub seed: u64,
    pub rule: WeightRule,
}

impl StudyGrid {
    pub fn validate(&self) -> Result<()> {
        if self.nsim == 0 {
            return Err(Error::Config("nsim must be >= 1".into()));
        }
        if self.replicates == 0 {
            return Err(Error::Config("B must be >= 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha = {} outside (0, 1)", self.alpha)));
        }
        if self.methods.is_empty() {
            return Err(Error::Config("no methods selected".into()));
        }
        for s in &self.scenarios {
            s.validate()?;
        }
        Ok(())
    }
}

/// Stable 64-bit key of a scenario, independent of its grid position.
pub fn scenario_key(s: &ScenarioConfig) -> u64 {
    let marginal = match s.marginal {
        Marginal::Normal => "normal".to_string(),
        Marginal::Exponential => "exponential".to_string(),
        Marginal::Laplace => "laplace".to_string(),
        Marginal::AsymmetricLaplace { kappa } => format!("al:{:016x}", kappa.to_bits()),
    };
    let text = format!(
        "{marginal}|{:016x}|{:016x}|{:016x}|{}|{}|{}|{:016x}|{:016x}",
        s.covariance.sigma1_sq.to_bits(),
        s.covariance.sigma2_sq.to_bits(),
        s.covariance.rho.to_bits(),
        s.n1,
        s.n2,
        s.n3,
        s.mu1.to_bits(),
        s.delta.to_bits(),
    );
    let digest = Sha256::digest(text.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 digest has 32 bytes"))
}

/// Seed of a (scenario, method) cell.
pub fn cell_seed(master: u64, scenario: &ScenarioConfig, method: Method) -> u64 {
    derive_seed(master, &[scenario_key(scenario), method.id()])
}

/// Numbers for one (scenario, method) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub scenario_id: usize,
    pub scenario: ScenarioConfig,
    pub method: Method,
    pub alpha: f64,
    pub nsim: usize,
    pub replicates: usize,
    pub outcome: CellOutcome,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellOutcome {
    Done { rejections: usize },
    Failed { reason: String },
}

impl CellResult {
    pub fn rejections(&self) -> Option<usize> {
        match self.outcome {
            CellOutcome::Done { rejections } => Some(rejections),
            CellOutcome::Failed { .. } => None,
        }
    }

    pub fn rejection_rate(&self) -> Option<f64> {
        self.rejections().map(|r| r as f64 / self.nsim as f64)
    }

    /// `sqrt(r (1 - r) / nsim)`
    pub fn mc_stderr(&self) -> Option<f64> {
        self.rejection_rate().map(|r| (r * (1.0 - r) / self.nsim as f64).sqrt())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub cell: CellResult,
    pub runtime: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyTable {
    pub rows: Vec<StudyRow>,
}

impl StudyTable {
    pub fn cells(&self) -> impl Iterator<Item = &CellResult> {
        self.rows.iter().map(|r| &r.cell)
    }

    pub fn find(&self, scenario: &ScenarioConfig, method: Method) -> Option<&CellResult> {
        self.cells().find(|c| &c.scenario == scenario && c.method == method)
    }
}

/// Run one method on one dataset; `true` if it rejects at `alpha` (two-sided).
pub fn rejects(
    sample: &PartiallyPairedSample,
    method: Method,
    alpha: f64,
    rule: WeightRule,
    replicates: usize,
    perm_seed: u64,
) -> Result<bool> {
    match method {
        Method::Tp => {
            let config = PermutationConfig {
                rule,
                replicates,
                seed: perm_seed,
                alpha,
                side: Side::TwoSided,
                parallel: false,
                ..PermutationConfig::default()
            };
            let dist = mc_permutation_distribution(sample, &config)?;
            Ok(dist.p_value(Side::TwoSided, config.two_sided, config.estimator) <= alpha)
        }
        Method::TAsymptotic => Ok(asymptotic_test(sample, rule, alpha, Side::TwoSided)?.reject),
        Method::TLinStivers => Ok(lin_stivers_test(sample, alpha, Side::TwoSided)?.reject),
        Method::KimT3 => Ok(kim_t3_test(sample, alpha, Side::TwoSided)?.reject),
    }
}

/// Simulate one cell. Datasets run in parallel on the current rayon pool.
pub fn run_cell(grid: &StudyGrid, scenario_id: usize, method: Method) -> CellResult {
    let scenario = grid.scenarios[scenario_id];
    let key = cell_seed(grid.seed, &scenario, method);
    let outcomes: Vec<Result<bool>> = (0..grid.nsim as u64)
        .into_par_iter()
        .map(|i| {
            let sample = generate_sample(&scenario, &mut stream(key, i))?;
            rejects(
                &sample,
                method,
                grid.alpha,
                grid.rule,
                grid.replicates,
                derive_seed(key, &[i]),
            )
        })
        .collect();
    let outcome = match outcomes.iter().position(|o| o.is_err()) {
        Some(i) => CellOutcome::Failed {
            reason: format!("simulation {i}: {}", outcomes[i].as_ref().unwrap_err()),
        },
        None => CellOutcome::Done {
            rejections: outcomes.iter().filter(|o| matches!(o, Ok(true))).count(),
        },
    };
    CellResult {
        scenario_id,
        scenario,
        method,
        alpha: grid.alpha,
        nsim: grid.nsim,
        replicates: grid.replicates,
        outcome,
    }
}

/// Run every (scenario, method) cell. A failing cell is recorded as failed;
/// the rest of the study continues.
pub fn run_study(grid: &StudyGrid) -> Result<StudyTable> {
    grid.validate()?;
    let mut rows = Vec::with_capacity(grid.scenarios.len() * grid.methods.len());
    for scenario_id in 0..grid.scenarios.len() {
        for &method in &grid.methods {
            let start = Instant::now();
            let cell = run_cell(grid, scenario_id, method);
            rows.push(StudyRow {
                cell,
                runtime: start.elapsed(),
            });
        }
    }
    Ok(StudyTable { rows })
}

/// [`run_study`] on a dedicated pool with `threads` workers (0 = rayon default).
pub fn run_study_with_threads(grid: &StudyGrid, threads: usize) -> Result<StudyTable> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_study(grid))
}
