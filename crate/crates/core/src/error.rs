use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed header: {0}")]
    MalformedHeader(String),

    #[error("unsupported NIfTI datatype code {0}")]
    UnsupportedDatatype(i16),

    #[error("payload holds {actual} bytes but the header describes {expected}")]
    PayloadMismatch { expected: usize, actual: usize },

    #[error("invalid spacing ({0}, {1}, {2}): every component must be finite and > 0")]
    InvalidSpacing(f64, f64, f64),

    #[error("invalid dimensions {0:?}")]
    InvalidDims([usize; 3]),

    #[error("dimension mismatch: prediction {pred:?} vs ground truth {gt:?}")]
    DimensionMismatch { pred: [usize; 3], gt: [usize; 3] },

    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),

    #[error("reference skeleton is empty")]
    EmptyReference,

    #[error("team `{0}` has no valid cases")]
    Unrankable(String),

    #[error("leaderboards rank different team sets: {0}")]
    TeamSetMismatch(String),

    #[error("invalid score weights: {0}")]
    InvalidWeights(String),

    #[error("phantom: {0}")]
    Phantom(String),

    #[error("invalid branch id {0}")]
    InvalidBranch(usize),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
