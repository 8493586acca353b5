use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("subsystem index {index} out of range for {len} subsystems")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid dims: {0}")]
    InvalidDims(String),

    #[error("non-finite entry encountered")]
    NonFinite,

    #[error("operator is not Hermitian (relative residual {0:e})")]
    NotHermitian(f64),

    #[error("operator has a negative eigenvalue {0:e}")]
    NegativeEigenvalue(f64),

    #[error("invalid trace {0}")]
    InvalidTrace(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("measure kind does not apply: {0}")]
    KindMismatch(String),

    #[error("matrix is not an isometry (residual {0:e})")]
    NotIsometry(f64),

    #[error("Kraus operators violate sum K^dag K <= I (excess {0:e})")]
    NotTraceNonIncreasing(f64),

    #[error("initial entanglement {0:e} is below the threshold; ratio undefined")]
    VanishingEntanglement(f64),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("method not applicable: {0}")]
    InapplicableMethod(String),

    #[error("malformed separable operation: {0}")]
    MalformedOperation(String),

    #[error("normal form did not converge")]
    NotConverged,
}

pub type Result<T> = std::result::Result<T, Error>;
