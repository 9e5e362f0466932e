use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the NBMF library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("coordinate ({row}, {col}) at line {line} is outside a {n_rows}x{n_cols} matrix")]
    OutOfBounds {
        line: usize,
        row: usize,
        col: usize,
        n_rows: usize,
        n_cols: usize,
    },

    #[error("duplicate coordinate ({row}, {col}) at line {line}")]
    Duplicate { line: usize, row: usize, col: usize },

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid split spec: {0}")]
    Spec(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical domain error: {0}")]
    Domain(String),

    #[error("objective became non-finite ({value}) at iteration {iteration}")]
    NumericalFailure { iteration: usize, value: f64 },

    #[error("evaluation set is empty")]
    EmptyEvaluation,

    #[error("infinite perplexity: prediction {prediction} at ({row}, {col}) contradicts label {label}")]
    InfiniteScore {
        row: usize,
        col: usize,
        prediction: f64,
        label: u8,
    },

    #[error("unknown key: {0}")]
    Key(String),

    #[error("search failed: {0}")]
    Search(String),

    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
