use thiserror::Error;

/// Errors raised by the estimation, testing and sampling routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid kernel specification: {0}")]
    InvalidKernel(String),

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("kernel specifications of the two operators differ")]
    KernelMismatch,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("rejection sampler acceptance rate {rate:.3e} is below the minimum {min:.0e}")]
    LowAcceptance { rate: f64, min: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
