use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum QcError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain too small: {0}")]
    DomainTooSmall(String),

    #[error("site {site} has a degenerate bond (deformed length {length:e})")]
    DegenerateConfiguration { site: usize, length: f64 },

    #[error("degenerate triangle {0} in mesh")]
    DegenerateTriangle(usize),

    #[error("matrix is not positive definite (pivot {pivot} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("no bracket for the lattice-constant minimum in [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    #[error("no equilibrium branch found: {0}")]
    NoBranch(String),

    #[error("the first continuation solve already tripped the instability detector")]
    InitialStateUnstable,

    #[error("zero denominator in {0}")]
    ZeroDenominator(&'static str),

    #[error("field has {found} sites, domain has {expected}")]
    FieldSize { expected: usize, found: usize },

    #[error("{path}:{line}: {message}")]
    Config {
        path: String,
        line: usize,
        message: String,
    },

    #[error("{0}")]
    Mismatch(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = QcError> = std::result::Result<T, E>;

impl QcError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        QcError::Io {
            path: path.into(),
            source,
        }
    }
}
