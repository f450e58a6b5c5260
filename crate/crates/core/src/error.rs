use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("resolution {got} is below the minimum of {min}")]
    ResolutionTooSmall { got: usize, min: usize },
    #[error("unsupported manifold: {0}")]
    UnsupportedManifold(String),
    #[error("invalid mode: {0}")]
    InvalidMode(String),
    #[error("sample count {got} does not match node count {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("non-finite field value at {0:?}")]
    NonFinite([f64; 3]),
    #[error("manifold mismatch: {0} vs {1}")]
    ManifoldMismatch(String, String),
    #[error("eigenvalue mismatch: {0} vs {1}")]
    EigenvalueMismatch(f64, f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
