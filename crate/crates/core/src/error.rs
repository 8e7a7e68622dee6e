use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate document id `{0}`")]
    DuplicateDocId(String),
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("invalid hyperparameter: {0}")]
    InvalidHyperparams(String),
    #[error("document index {index} out of range (corpus has {len} documents)")]
    DocOutOfRange { index: usize, len: usize },
    #[error("sentence index {index} out of range (document has {len} sentences)")]
    SentenceOutOfRange { index: usize, len: usize },
    #[error("rating {rating} outside 1..={k}")]
    RatingOutOfRange { rating: u32, k: u32 },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),
    #[error("no nonzero values to bucketize")]
    NothingToBucketize,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported format version {found} (expected {expected})")]
    FormatVersion { found: u32, expected: u32 },
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
