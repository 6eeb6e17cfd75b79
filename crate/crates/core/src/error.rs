use thiserror::Error;

/// Errors raised by the analysis kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix contains NaN or infinite entries")]
    NonFinite,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {dim} exceeds the supported maximum of {max}")]
    DimensionTooLarge { dim: usize, max: usize },

    #[error("matrix is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64 },

    #[error("ill-conditioned problem: {0}")]
    IllConditioned(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("index {index} out of range for {len} symbols")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("budget exceeded while {what} (limit {limit})")]
    BudgetExceeded { what: &'static str, limit: u64 },

    #[error("degenerate distribution: {0}")]
    DegenerateDistribution(String),

    #[error("lifted state space has {states} states, above the cap of {cap}")]
    StateExplosion { states: u64, cap: u64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
