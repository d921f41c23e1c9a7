use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension must be at least 1")]
    ZeroDimension,

    #[error("expected {expected} entries for a {dim}x{dim} matrix, got {found}")]
    EntryCount {
        dim: usize,
        expected: usize,
        found: usize,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian: max |M - M^dagger| = {deviation:e} exceeds {tolerance:e}")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("state is not normalized: norm^2 = {norm_sq}")]
    NotNormalized { norm_sq: f64 },

    #[error("invalid amplitude profile: {0}")]
    InvalidProfile(String),

    #[error("invalid Dirichlet parameters: {0}")]
    InvalidAlpha(String),

    #[error("invalid density matrix: {0}")]
    InvalidDensity(String),

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("at least 2 samples are required, got {0}")]
    TooFewSamples(usize),

    #[error("time list is empty")]
    EmptyTimes,

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("no exact moments for the {0} ensemble; use the Monte Carlo estimator")]
    ExactUnavailable(&'static str),
}
