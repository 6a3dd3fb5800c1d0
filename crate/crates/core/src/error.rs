use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A single malformed row in an input file. `line` is 1-based.
    #[error("{}:{line}: {message}", path.display())]
    Record {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: missing column `{column}`", path.display())]
    MissingColumn { path: PathBuf, column: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("phrase has no words")]
    EmptyPhrase,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("zero-norm vector")]
    ZeroVector,

    #[error("zero variance in {0}")]
    ZeroVariance(String),

    #[error("need at least {needed} values, got {got}")]
    TooFewValues { needed: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("{count} missing records, first: {}", first.join(", "))]
    MissingRecords { count: usize, first: Vec<String> },

    #[error("key sets differ in {count} keys, first: {}", first.join(", "))]
    KeyMismatch { count: usize, first: Vec<String> },

    #[error("manifest mismatch: {0}")]
    ManifestMismatch(String),

    #[error("insufficient negative candidates: need {needed}, found {available} (short by {})", needed - available)]
    InsufficientCandidates { needed: usize, available: usize },

    #[error("training labels contain a single class")]
    SingleClass,

    #[error("non-finite loss at epoch {epoch}, batch {batch} (last finite loss {last_loss})")]
    Divergence {
        epoch: usize,
        batch: usize,
        last_loss: f64,
    },

    #[error("{predictions} predictions for {items} items")]
    Misaligned { items: usize, predictions: usize },
}

impl Error {
    /// Stable, machine-parsable error class used by the CLI's failure line.
    pub fn class(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Record { .. } | Error::MissingColumn { .. } | Error::Format(_) => "schema",
            Error::InvalidInput(_) | Error::EmptyPhrase | Error::Misaligned { .. } => "input",
            Error::DimensionMismatch { .. } | Error::ManifestMismatch(_) => "shape",
            Error::ZeroVector
            | Error::ZeroVariance(_)
            | Error::TooFewValues { .. }
            | Error::NonFinite(_)
            | Error::Divergence { .. } => "numeric",
            Error::MissingRecords { .. } | Error::KeyMismatch { .. } => "coverage",
            Error::InsufficientCandidates { .. } => "sampling",
            Error::SingleClass => "training",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn record(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Record {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
