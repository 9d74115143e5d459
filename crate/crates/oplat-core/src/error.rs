use thiserror::Error;

/// Errors shared by every module of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("element is not hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),
    #[error("element is not positive (least eigenvalue {0:.3e})")]
    NotPositive(f64),
    #[error("algebra mismatch: {0}")]
    AlgebraMismatch(String),
    #[error("operation requires the {expected} kind")]
    KindMismatch { expected: &'static str },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("witness construction failed: {0}")]
    WitnessFailure(String),
    #[error("iteration limit {limit} exceeded (last gap {gap:.3e})")]
    MaxIterExceeded { limit: usize, gap: f64 },
    #[error("linear program: {0}")]
    Infeasible(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
