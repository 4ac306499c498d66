use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid truncation: {0}")]
    InvalidTruncation(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("operator {index} is not hermitian (residual {residual:e})")]
    NotHermitian { index: usize, residual: f64 },

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("pairing structure violated: {0}")]
    Structure(String),

    #[error("singular map: {0}")]
    SingularMap(String),

    #[error("matrix is not positive definite: eigenvalue {eigenvalue:e} at index {index}")]
    NotPositiveDefinite { eigenvalue: f64, index: usize },

    #[error("unsupported limit: {0}")]
    UnsupportedLimit(String),

    #[error("non-normalizable: {0}")]
    NonNormalizable(String),

    #[error("truncation too small: tail mass {tail_mass:e} at dimension {dim}; retry with a larger truncation")]
    Truncation { tail_mass: f64, dim: usize },

    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),

    #[error("excluded parameters: {0}")]
    ExcludedParameters(String),

    #[error("no simultaneous eigenstate: operator {j} residual {residual:e}")]
    NotSolvable { j: usize, residual: f64 },

    #[error("quadratic generator is not hermitian: {0}")]
    NonHermitianGenerator(String),
}

pub type Result<T> = std::result::Result<T, Error>;
