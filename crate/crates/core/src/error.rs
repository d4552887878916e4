use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum SssaError {
    #[error("dimension mismatch: {what} ({left} vs {right})")]
    DimensionMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("dictionary atom {index} has zero norm")]
    ZeroAtom { index: usize },

    #[error("invalid number of time steps T={0} (need T >= 2)")]
    InvalidT(usize),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not positive definite (min eigenvalue {min}, max eigenvalue {max})")]
    NotPositiveDefinite { min: f64, max: f64 },

    #[error("soft threshold must be nonnegative, got {0}")]
    NegativeThreshold(f64),

    #[error("atom index {index} out of range 1..={n}")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("reference matrix has zero norm")]
    ZeroReference,

    #[error("sample length mismatch ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("too few samples for a paired test: {0} (need at least 2)")]
    TooFewSamples(usize),

    #[error("incomplete grid: cell ({0}, {1}) missing")]
    IncompleteGrid(usize, usize),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cell ({na_index}, {dur_index}): {source}")]
    Cell {
        na_index: usize,
        dur_index: usize,
        #[source]
        source: Box<SssaError>,
    },

    #[error("parse error in {path}: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SssaError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        SssaError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors that come out of the numerical solvers rather than from bad input data.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            SssaError::NotPositiveDefinite { .. } | SssaError::NonFinite(_) => true,
            SssaError::Cell { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, SssaError>;

pub(crate) fn check_dim(what: &'static str, left: usize, right: usize) -> Result<()> {
    if left != right {
        return Err(SssaError::DimensionMismatch { what, left, right });
    }
    Ok(())
}
