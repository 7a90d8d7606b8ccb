use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operation is undefined at the zero vector")]
    ZeroVector,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("degenerate cloud: {0}")]
    DegenerateCloud(String),

    #[error("basis vectors are linearly dependent (|det| = {det:e})")]
    DependentBasis { det: f64 },

    #[error("unbounded lattice constant in coordinate {coordinate}: coincident coordinates with differing values")]
    UnboundedConstant { coordinate: usize },

    #[error("duplicate sample coordinates with differing operator values")]
    ConflictingSamples,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown operator key `{0}`")]
    UnknownOperator(String),

    #[error("malformed input file {path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures that come from the numerics rather than the inputs'
    /// syntax: unbounded constants, degenerate clouds and the like.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NumericalFailure(_)
                | Error::DegenerateCloud(_)
                | Error::DependentBasis { .. }
                | Error::UnboundedConstant { .. }
                | Error::ConflictingSamples
                | Error::ZeroVector
                | Error::NonFinite(_)
        )
    }

    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::UnknownOperator(_))
    }
}
