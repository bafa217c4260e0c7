use thiserror::Error;

use varpremia::Error as CoreError;

/// Failure of a command, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }
}

fn classify(e: &CoreError) -> fn(String) -> CliError {
    match e {
        CoreError::InvalidInput(_) | CoreError::DimensionMismatch { .. } | CoreError::PremiaViolation(_) => CliError::Config,
        CoreError::Data(_)
        | CoreError::TooFewStrikes { .. }
        | CoreError::Arbitrage(_)
        | CoreError::PriceOutOfBounds { .. } => CliError::Data,
        CoreError::Stage { source, .. } => match **source {
            CoreError::Data(_) | CoreError::TooFewStrikes { .. } | CoreError::Arbitrage(_) => CliError::Data,
            _ => CliError::Numerical,
        },
        _ => CliError::Numerical,
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        classify(&e)(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
