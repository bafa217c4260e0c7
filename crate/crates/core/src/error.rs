use thiserror::Error;

/// Errors raised by the pricing library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("risk premia violate model consistency: {}", .0.join(", "))]
    PremiaViolation(Vec<String>),

    #[error("complex spectrum: max imaginary part {imag:e} exceeds tolerance {tol:e}")]
    ComplexSpectrum { imag: f64, tol: f64 },

    #[error("matrix is singular or not diagonalizable: {0}")]
    Singular(String),

    #[error("non-positive forward variance {value:e} at t = {time}")]
    NonPositiveForwardVariance { time: f64, value: f64 },

    #[error("too few strikes: {puts} puts and {calls} calls (need at least {need} each)")]
    TooFewStrikes { puts: usize, calls: usize, need: usize },

    #[error("arbitrage-violating moments: {0}")]
    Arbitrage(String),

    #[error("price {price} outside no-arbitrage bounds [{lower}, {upper}]")]
    PriceOutOfBounds { price: f64, lower: f64, upper: f64 },

    #[error("calibration stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("data error: {0}")]
    Data(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<S: Into<String>>(msg: S) -> Error {
    Error::InvalidInput(msg.into())
}
