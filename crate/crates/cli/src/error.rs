use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{0}")]
    Precondition(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

fn remedy(e: &pairperm::Error) -> Option<&'static str> {
    use pairperm::Error::*;
    match e {
        TooFewCompletePairs { .. } => Some("supply at least 2 complete pairs or use --weight fixed=0"),
        TooFewIncomplete { .. } => Some("supply at least 2 unpaired values per arm or use --weight fixed=1"),
        TooFewObservations { .. } => Some("this method needs more data; try --method perm"),
        DegenerateVariance(_) | DegenerateDenominator(_) => Some("the data have no spread in the named part"),
        GroupTooLarge { .. } => Some("use the Monte Carlo test instead of full enumeration"),
        _ => None,
    }
}

impl From<pairperm::Error> for CliError {
    fn from(e: pairperm::Error) -> Self {
        match e {
            pairperm::Error::Io(m) => CliError::Io(m),
            pairperm::Error::Parse(m) | pairperm::Error::Config(m) => CliError::Parse(m),
            pairperm::Error::RecordBothMissing { .. } | pairperm::Error::NonFiniteValue { .. } => {
                CliError::Parse(e.to_string())
            }
            other => match remedy(&other) {
                Some(r) => CliError::Precondition(format!("{other} ({r})")),
                None => CliError::Precondition(other.to_string()),
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
