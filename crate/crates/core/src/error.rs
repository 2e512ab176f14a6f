use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("record {index} has both components missing")]
    RecordBothMissing { index: usize },

    #[error("non-finite value {value} in record {index}")]
    NonFiniteValue { index: usize, value: f64 },

    #[error("need at least 2 complete pairs, got {n1}")]
    TooFewCompletePairs { n1: usize },

    #[error("need at least 2 observations in each incomplete arm, got n2={n2}, n3={n3}")]
    TooFewIncomplete { n2: usize, n3: usize },

    #[error("too few observations for {statistic}: {reason}")]
    TooFewObservations { statistic: &'static str, reason: String },

    #[error("degenerate (zero) variance in {0}")]
    DegenerateVariance(&'static str),

    #[error("degenerate denominator in {0}")]
    DegenerateDenominator(&'static str),

    #[error("draw dimensions ({flips} flips, {slots} slots) do not match sample (n1={n1}, n2+n3={pooled})")]
    DimensionMismatch {
        flips: usize,
        slots: usize,
        n1: usize,
        pooled: usize,
    },

    #[error("randomization group has {size} elements, limit is {limit}")]
    GroupTooLarge { size: f64, limit: u64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("covariance matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    #[error("study config: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o failure: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// True for errors caused by the data not meeting a statistic's requirements.
    pub fn is_precondition(&self) -> bool {
        matches!(
            self,
            Error::TooFewCompletePairs { .. }
                | Error::TooFewIncomplete { .. }
                | Error::TooFewObservations { .. }
                | Error::DegenerateVariance(_)
                | Error::DegenerateDenominator(_)
                | Error::DimensionMismatch { .. }
                | Error::GroupTooLarge { .. }
                | Error::InvalidParameter(_)
                | Error::NotPositiveDefinite(_)
        )
    }
}
