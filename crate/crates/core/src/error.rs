use thiserror::Error;

/// Errors raised by every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum MetriqError {
    /// Input has the wrong shape: non-square matrix, bad index, overlapping blocks.
    #[error("structural error: {0}")]
    Structural(String),

    /// A parameter lies outside the range an operation accepts.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A matrix fails a metric axiom.
    #[error("not a metric: {0}")]
    NotMetric(String),

    /// A randomized construction exhausted its resampling budget.
    #[error("{what}: no acceptable sample after {attempts} attempts ({detail})")]
    ProbabilisticFailure { what: &'static str, attempts: usize, detail: String },

    /// A construction ran to completion but its output misses a required size.
    #[error("construction failure: {0}")]
    Construction(String),

    /// A computed certificate does not satisfy the bound the construction guarantees.
    #[error("certificate violated: {0}")]
    Certificate(String),

    /// Input did not have enough points in the required distance band.
    #[error("insufficient band: {0}")]
    InsufficientBand(String),

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, MetriqError>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(MetriqError::Parameter(msg.into()))
}

pub(crate) fn structural<T>(msg: impl Into<String>) -> Result<T> {
    Err(MetriqError::Structural(msg.into()))
}
