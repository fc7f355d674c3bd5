use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid machine model: {0}")]
    Machine(String),
    #[error("invalid kernel `{name}`: {reason}")]
    Kernel { name: String, reason: String },
    #[error("invalid trace: {0}")]
    Trace(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
