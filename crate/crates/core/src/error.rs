use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("vertex {0} lies outside the box of half-width {1}")]
    OutOfBox(String, i64),

    #[error("backend mismatch: {0}")]
    BackendMismatch(String),

    #[error("path too short: need at least {needed} points, have {have}")]
    PathTooShort { needed: usize, have: usize },

    #[error("horizon {requested} exceeds the memory budget of {budget} steps")]
    HorizonTooLarge { requested: usize, budget: usize },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("unknown experiment id `{0}`")]
    UnknownExperiment(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, LabError>;

impl LabError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io {
            path: path.into(),
            source,
        }
    }
}
