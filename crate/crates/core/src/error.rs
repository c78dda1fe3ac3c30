use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabError {
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("out of range: {0}")]
    Range(String),
    #[error("unsupported kernel: {0}")]
    UnsupportedKernel(String),
    #[error("window error: {0}")]
    Window(String),
    #[error("source evaluation failed at t = {time}: {reason}")]
    Source { time: f64, reason: String },
}

pub type Result<T> = std::result::Result<T, LabError>;
