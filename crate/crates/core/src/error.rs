use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the clustering library.
#[derive(Debug, Error)]
pub enum GpacError {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("row {row} cannot be normalized: {reason}")]
    DegenerateRow { row: usize, reason: &'static str },

    #[error("non-finite squared distance between samples {0} and {1}")]
    NonFiniteDistance(usize, usize),

    #[error("kernel bandwidth estimate is zero (all neighbors coincide); supply sigma explicitly")]
    ZeroSigma,

    #[error("cannot pick {requested} distinct seeds from {available} distinct points")]
    TooFewDistinctPoints { requested: usize, available: usize },

    #[error("non-finite membership for sample {0}")]
    NonFiniteMembership(usize),

    #[error("label vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = GpacError> = std::result::Result<T, E>;

impl GpacError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        GpacError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        GpacError::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
