use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed dataset line {line}: {reason}")]
    Dataset { line: usize, reason: String },

    #[error("parse error in block {block}, line {line}: {reason}")]
    Conll {
        block: usize,
        line: usize,
        reason: String,
    },

    #[error("tensor package error: {0}")]
    Tensor(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("{0}")]
    Invalid(String),

    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 for validation problems, 3 for
    /// numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numeric(_) => 3,
            _ => 2,
        }
    }
}
