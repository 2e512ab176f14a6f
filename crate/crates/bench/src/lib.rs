//! Fixtures shared by the benchmarks.

use pairperm::rng::stream;
use pairperm::{generate_sample, CovarianceSpec, Marginal, PartiallyPairedSample, ScenarioConfig};

pub fn scenario(n1: usize, n2: usize, n3: usize) -> ScenarioConfig {
    ScenarioConfig {
        marginal: Marginal::Normal,
        covariance: CovarianceSpec::homoscedastic(0.5).expect("valid covariance"),
        n1,
        n2,
        n3,
        mu1: 0.0,
        delta: 0.0,
    }
}

pub fn sample(n1: usize, n2: usize, n3: usize) -> PartiallyPairedSample {
    generate_sample(&scenario(n1, n2, n3), &mut stream(1, 0)).expect("valid scenario")
}
