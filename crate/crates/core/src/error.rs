use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("duplicate application address {0}")]
    DuplicateAddress(String),

    #[error("labeled addresses missing from transaction data: {}", .0.join(", "))]
    MissingAddresses(Vec<String>),

    #[error("transaction {tx_hash} at {timestamp} precedes application creation at {created_at}")]
    TimestampBeforeCreation {
        tx_hash: String,
        timestamp: i64,
        created_at: i64,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("feature arity mismatch: expected {expected}, got {got}")]
    ArityMismatch { expected: usize, got: usize },

    #[error("not enough samples: {0}")]
    InsufficientData(String),

    #[error("operation not supported by {model} model: {op}")]
    Unsupported {
        model: &'static str,
        op: &'static str,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
