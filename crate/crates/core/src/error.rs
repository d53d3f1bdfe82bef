use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("estimator requires normalized importance weights")]
    NonNormalizedWeights,

    #[error("observed point and draws carry weights on different scales")]
    MixedWeightScales,

    #[error("importance weights are all zero")]
    DegenerateWeights,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("margins admit no binary matrix")]
    InfeasibleMargins,

    #[error("point is not in the fiber: {0}")]
    NotInFiber(String),

    #[error("too large to enumerate: {0}")]
    TooLarge(String),

    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }
}
