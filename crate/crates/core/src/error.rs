use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, KgeError>;

#[derive(Debug, Error)]
pub enum KgeError {
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

    #[error("{path}:{line}: unknown {kind} '{name}'")]
    UnknownSymbol {
        path: PathBuf,
        line: usize,
        kind: &'static str,
        name: String,
    },

    #[error("{kind} id {id} out of range (size {size})")]
    IdOutOfRange {
        kind: &'static str,
        id: usize,
        size: usize,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("checkpoint error: {0}")]
    Checkpoint(String),

    #[error("filter index corrupted: {0}")]
    FilterCorruption(String),
}

impl KgeError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        KgeError::Io {
            path: path.into(),
            source,
        }
    }
}
