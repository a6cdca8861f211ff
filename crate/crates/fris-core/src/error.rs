//! Crate-wide error type.

use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Inconsistent vector/matrix dimensions.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Structurally valid input on which the operation is ill-posed
    /// (empty path lists, degenerate grids, zero-norm updates).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A matrix that must be invertible was rank deficient.
    #[error("rank-deficient matrix: {0}")]
    RankDeficient(String),

    /// An iterative solver aborted (non-finite objective, no valid bracket).
    #[error("solver failure: {0}")]
    Solver(String),

    /// Invalid scenario configuration.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error on {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        Error::Csv {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
