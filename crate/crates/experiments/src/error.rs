use thiserror::Error;

/// Failures split by exit status: bad input (1) versus failures while computing (2).
#[derive(Debug, Error)]
pub enum AppError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Runtime(String),
}

pub type AppResult<T> = std::result::Result<T, AppError>;

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Input(_) => 1,
            AppError::Runtime(_) => 2,
        }
    }
}

impl From<kshrink::Error> for AppError {
    fn from(e: kshrink::Error) -> Self {
        use kshrink::Error as E;
        match e {
            E::Numerical(_) => AppError::Runtime(e.to_string()),
            _ => AppError::Input(e.to_string()),
        }
    }
}
