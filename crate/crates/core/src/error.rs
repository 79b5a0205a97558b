use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid model specification: {0}")]
    InvalidSpec(String),

    #[error("system is not asymptotically stable (stability margin {margin:e})")]
    Unstable { margin: f64 },

    #[error("linear solve failed: {0}")]
    Singular(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),

    #[error("signal derivative is zero; the parameter is not identifiable from this observable")]
    ZeroDerivative,

    #[error("precision is undefined at this point: {0}")]
    UndefinedPrecision(String),

    #[error("invalid simulation configuration: {0}")]
    InvalidConfig(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}
