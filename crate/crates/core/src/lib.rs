//! Studentized randomization tests for matched pairs with missing values.
//!
//! Data are split into complete pairs and two arms of unpaired observations
//! ([`PartiallyPairedSample`]). The weighted statistic
//! `T = sqrt(a) T1 + sqrt(1 - a) T2` combines a paired t statistic with a
//! Welch statistic and is calibrated either against N(0, 1) or against its
//! randomization distribution, obtained by flipping pair components and
//! permuting the pooled unpaired observations.
//!
//! Modules:
//! - [`sample`]: data container, ingestion and summaries
//! - [`statistics`]: closed-form statistics and reference-distribution tests
//! - [`randomization`]: permutation tests, confidence intervals, TOST
//! - [`lab`]: simulation data generators
//! - [`harness`]: rejection-rate studies over scenario grids

pub mod error;
pub mod harness;
pub mod lab;
pub mod randomization;
pub mod reference;
pub mod rng;
pub mod sample;
pub mod statistics;

pub use error::{Error, Result};
pub use harness::{run_study, CellOutcome, CellResult, Method, StudyGrid, StudyTable};
pub use lab::{generate_sample, CovarianceSpec, Marginal, ScenarioConfig};
pub use randomization::{
    confidence_interval, exact_permutation_test, mc_permutation_test, tost_equivalence_test, ConfidenceInterval,
    PermutationConfig, PermutationDistribution, PermutationTestResult, RandomizationDraw, TostResult,
};
pub use sample::{summarize, PartiallyPairedSample, SampleSummary};
pub use statistics::{Reference, Side, StatisticValue, TestOutcome, WeightRule};
