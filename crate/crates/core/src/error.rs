use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the identification/control pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("filter {family}: {sum} = {actual:.17} but expected {expected:.17}")]
    FilterNormalization {
        family: String,
        sum: &'static str,
        actual: f64,
        expected: f64,
    },

    #[error("cascade levels must lie in [4, 16], got {0}")]
    InvalidLevels(u32),

    #[error("insufficient atoms: dictionary has {actual}, at least {minimum} required")]
    InsufficientAtoms { actual: usize, minimum: usize },

    #[error("dictionary does not cover [0, 10): uncovered ranges {0}")]
    Uncovered(String),

    #[error("invalid dictionary spec: {0}")]
    InvalidDictionary(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("dictionary column {index} has norm {norm:.12}, expected 1")]
    NonUnitColumn { index: usize, norm: f64 },

    #[error("index {index} out of range for dictionary of size {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("unstable reference model: {0}")]
    Unstable(String),

    #[error("complex pole {0} has no conjugate partner")]
    UnpairedPole(String),

    #[error("non-finite {quantity} at step {step}")]
    NonFinite { step: usize, quantity: &'static str },

    #[error("non-finite {0}")]
    NonFiniteInput(&'static str),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("config not found: {}", .0.display())]
    ConfigNotFound(PathBuf),

    #[error("unknown trace column `{0}`")]
    UnknownColumn(String),

    #[error("malformed CSV: {0}")]
    Csv(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }
}
