use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max deviation {deviation:.3e}, tolerance {tolerance:.3e})")]
    NotHermitian { deviation: f64, tolerance: f64 },

    #[error("energy window [{lower}, {lower_plus_width}) contains no eigenvalues")]
    EmptyWindow { lower: f64, lower_plus_width: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),

    #[error("outcome {outcome} has zero probability")]
    ZeroProbabilityOutcome { outcome: u64 },

    #[error("quadrature failed to converge: {0}")]
    Quadrature(String),

    #[error("linear algebra backend failure: {0}")]
    Backend(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
