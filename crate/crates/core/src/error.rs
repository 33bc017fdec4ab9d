use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("parameters differ: {0}")]
    ParamsMismatch(String),
    #[error("enumeration cap exceeded: {0}")]
    CapExceeded(String),
    #[error("invalid block: {0}")]
    InvalidBlock(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("not a permutation: {0}")]
    InvalidPermutation(String),
    #[error("argument outside formula domain: {0}")]
    DomainError(String),
    #[error("formula produced a non-integer value: {0}")]
    NonIntegerResult(String),
    #[error("invalid construction anchors: {0}")]
    InvalidAnchors(String),
    #[error("construction infeasible: {0}")]
    InfeasibleConstruction(String),
    #[error("family is empty")]
    EmptyFamily,
    #[error("family has no t-cover")]
    NoCover,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("search inconclusive: {0}")]
    Inconclusive(String),
    #[error("cache file corrupt: {0}")]
    CacheCorrupt(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        Error::Parse(err.to_string())
    }
}
