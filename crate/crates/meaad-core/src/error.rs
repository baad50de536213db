use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("vector norm is below 1e-12, cannot normalize")]
    ZeroVector,

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("gallery has {eligible} eligible items, need {requested}")]
    InsufficientGallery { requested: usize, eligible: usize },

    #[error("support sets have mismatched sizes: {0} vs {1}")]
    MismatchedSupportSizes(usize, usize),

    #[error("operation requires at least two experts")]
    SingleExpert,

    #[error("training set contains a single class")]
    SingleClassDataset,

    #[error("scores contain a single class, metric undefined")]
    SingleClass,

    #[error("input lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("empty input")]
    Empty,

    #[error("query {0} has label 'unknown'; labeled rows are required here")]
    UnlabeledQuery(u64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("detector does not match this scenario: {0}")]
    NotTrained(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("unsupported file version: {0}")]
    UnsupportedVersion(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
