use thiserror::Error;

/// Errors raised anywhere in the simulator, learner, or harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("SIC feasibility violated: {0}")]
    SicFeasibility(String),

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("action index {index} out of range for a space of {cardinality} actions")]
    ActionOutOfRange { index: u128, cardinality: u128 },

    #[error("action space too large to index: {0}")]
    CardinalityOverflow(String),

    #[error("numerical error at parameter {index}: {detail}")]
    Numerical { index: usize, detail: String },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("exhaustive search refused: {0}")]
    ExhaustiveCap(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
