use thiserror::Error;

#[derive(Debug, Error)]
pub enum MesError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite feature value at index {index}")]
    NonFinite { index: usize },

    #[error("empty feature vector")]
    EmptyVector,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate classifier on data: class {missing} has no points")]
    DegenerateClassifier { missing: u8 },

    #[error(
        "class too rare: label {label} accepted {accepted}/{requested} after {draws} draws \
         (acceptance rate {rate:.3e})"
    )]
    ClassTooRare {
        label: u8,
        accepted: usize,
        requested: usize,
        draws: usize,
        rate: f64,
    },

    #[error("transport error: {0}")]
    Transport(String),

    #[error("classifier is nondeterministic: repeated query at the same point changed label")]
    Nondeterministic,

    #[error("non-finite surrogate loss (check feature scaling)")]
    NonFiniteLoss,

    #[error("degenerate explanation: constant rule")]
    DegenerateExplanation,

    #[error("coverage loop exceeded {0} iterations")]
    IterationCap(usize),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = MesError> = std::result::Result<T, E>;
