use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the core library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}{}: {message}", column.as_ref().map(|c| format!(", column '{c}'")).unwrap_or_default())]
    Parse {
        row: usize,
        column: Option<String>,
        message: String,
    },

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("column '{0}' not found")]
    MissingColumn(String),

    #[error("column '{0}' has no observed values")]
    EmptyColumn(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("labels contain a single class")]
    SingleClass,

    #[error("class {class} has {count} members, fewer than k = {k} folds")]
    TooFewInClass { class: u8, count: usize, k: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("unsupported table shape: {0}")]
    UnsupportedShape(String),

    #[error("covariance is singular even after regularization (epsilon = {0:e})")]
    SingularCovariance(f64),

    #[error("forest lacks node cover statistics; re-fit the model")]
    MissingCover,

    #[error("unsupported format version {found} (expected {expected})")]
    FormatVersion { found: u32, expected: u32 },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
