use thiserror::Error;

/// Errors raised by scenario handling, prediction and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("trajectory has no valid states")]
    NoValidStates,
    #[error("arc length {arc} outside polyline range [0, {total}]")]
    ArcOutOfRange { arc: f64, total: f64 },
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("degenerate agent `{0}`: no lane within reach and no usable heading")]
    Degenerate(String),
    #[error("training set is missing class {0}")]
    MissingClass(&'static str),
    #[error("requested {k} samples from {available} candidates")]
    NotEnoughCandidates { k: usize, available: usize },
    #[error("influence graph contains a cycle")]
    CyclicGraph,
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
