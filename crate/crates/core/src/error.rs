use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: left has {left} entries, right has {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("vectors must have at least one dimension")]
    EmptyVector,

    #[error("non-finite value {value} at index {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("norm must be ≥ 1, got {0}")]
    InvalidNorm(f64),

    #[error("invalid weight vector: {0}")]
    InvalidWeights(String),

    #[error("kappa must lie in [0, 1], got {0}")]
    InvalidKappa(f64),

    #[error("fitness needs at least 2 classes, found {0}")]
    TooFewClasses(usize),

    #[error("degenerate fitness: {0}")]
    DegenerateFitness(String),

    #[error("empty dataset")]
    EmptyDataset,

    #[error("k = {k} is out of range for a training set of {n} samples")]
    InvalidK { k: usize, n: usize },

    #[error("invalid fold count {folds} for {samples} samples")]
    InvalidFolds { folds: usize, samples: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: row {row}, column {column}: {message}")]
    Parse {
        path: PathBuf,
        row: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: {message}")]
    Csv { path: PathBuf, message: String },

    #[error("boundary is unbounded along axis {axis} (zero weight)")]
    UnboundedAxis { axis: usize },
}

impl Error {
    /// True for errors that originate in input data rather than in parameters.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            Error::Io { .. }
                | Error::Parse { .. }
                | Error::Csv { .. }
                | Error::InvalidDataset(_)
                | Error::EmptyDataset
        )
    }
}
