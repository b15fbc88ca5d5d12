use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("malformed log line: {0}")]
    MalformedLine(String),

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("join produced no rows ({records} records, {queries} queries); filter serialization mismatch?")]
    EmptyJoin { records: usize, queries: usize },

    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),

    #[error("contingency table has a zero row or column total")]
    ZeroMargin,

    #[error("only one class present{0}")]
    SingleClass(String),

    #[error("perplexity {perplexity} must be smaller than the number of points {n}")]
    PerplexityTooLarge { perplexity: f64, n: usize },

    #[error("non-finite value in input at row {row}, column {col}")]
    NonFiniteInput { row: usize, col: usize },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("too few rows: {got} (need at least {need})")]
    TooFewRows { got: usize, need: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid hyperparameters for {family}: {reason}")]
    InvalidHyperparameters { family: String, reason: String },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
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
