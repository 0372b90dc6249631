use thiserror::Error;

/// Errors surfaced by the laboratory.
///
/// Validation errors cover violated preconditions and malformed input;
/// resolution errors mean a discretization is too coarse for the requested
/// evaluation. The CLI maps them to exit codes 2 and 3.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("resolution error: {0}")]
    Resolution(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl LabError {
    pub fn validation(msg: impl Into<String>) -> Self {
        LabError::Validation(msg.into())
    }

    pub fn resolution(msg: impl Into<String>) -> Self {
        LabError::Resolution(msg.into())
    }

    /// Process exit code used by the command-line harness.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Resolution(_) => 3,
            LabError::Validation(_) => 2,
            LabError::Io(_) | LabError::Json(_) | LabError::Csv(_) => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, LabError>;
