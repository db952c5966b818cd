use thiserror::Error;

/// Errors produced by model construction, fitting, and I/O.
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("penalty value undefined for hard rank constraint")]
    ExactRankPenalty,

    #[error("SVD failed: {0}")]
    Svd(String),

    #[error("objective became non-finite at iteration {iteration} (last finite value {last})")]
    NonFiniteObjective { iteration: usize, last: f64 },

    #[error("no converged fit on the regularization path: {0}")]
    NoConvergedFit(String),

    #[error("CSV parse error at row {row}: {msg}")]
    CsvParse { row: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
