use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema mismatch: expected {expected} features, got {got}")]
    Arity { expected: usize, got: usize },

    #[error("feature {feature}: {reason}")]
    FeatureKind { feature: usize, reason: String },

    #[error("label must be 0 or 1, got {0}")]
    Label(u8),

    #[error("example not in active set")]
    NotInActiveSet,

    #[error("relative edit distance is undefined for two empty multisets")]
    BothEmpty,

    #[error(
        "categorical build requires every feature to be categorical (feature {0} is real-valued)"
    )]
    NotCategorical(usize),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("sequences differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("row {row}: {reason}")]
    Row { row: usize, reason: String },

    #[error("label column {0:?} not found in header")]
    UnknownColumn(String),

    #[error("feasibility violated after update {update}: {detail}")]
    Verification { update: usize, detail: String },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
