use metriq_core::MetriqError;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] MetriqError),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    /// Arguments are individually valid but do not fit together.
    #[error("usage: {0}")]
    Usage(String),

    /// A plan references an unsupported combination or out-of-range parameter.
    #[error("invalid plan: {0}")]
    Plan(String),

    /// A bundle fails its checksum or schema.
    #[error("structural error: {0}")]
    Structural(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(CliError::Usage(msg.into()))
}
