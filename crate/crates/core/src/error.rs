use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, PgcError>;

#[derive(Debug, Error)]
pub enum PgcError {
    /// A caller-supplied argument violates an operation precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("label out of range: {0}")]
    LabelOutOfRange(String),

    #[error("{path}:{line}: {msg}")]
    Record { path: PathBuf, line: usize, msg: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("structure error: {0}")]
    Structure(String),

    #[error("model format error: {0}")]
    Format(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("enumeration cap exceeded: {count} graphs > cap {cap}")]
    CapExceeded { count: u128, cap: u128 },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl PgcError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PgcError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        PgcError::InvalidArgument(msg.into())
    }
}
