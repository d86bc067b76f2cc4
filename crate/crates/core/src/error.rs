use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("step {step} is inactive for this parameter set")]
    InactiveStep { step: usize },
    #[error("unsupported combination: {0}")]
    Unsupported(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("insufficient nodes: requested {requested}, available {available}")]
    InsufficientNodes { requested: u64, available: u64 },
    #[error("config error at line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("contention detected: {0}")]
    Contention(String),
    #[error("oracle mismatch: {0}")]
    OracleMismatch(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
