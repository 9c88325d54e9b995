use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid mapping: {0}")]
    InvalidMapping(String),
    #[error("interface mismatch: {0}")]
    InterfaceMismatch(String),
    #[error("overlap layout: {0}")]
    Overlap(String),
    #[error("singular system: {0}")]
    Singular(String),
    #[error("eigensolver failed: {0}")]
    Eigen(String),
    #[error("no sign change on bracket [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
