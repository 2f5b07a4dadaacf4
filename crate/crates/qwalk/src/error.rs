use thiserror::Error;

/// Crate-wide error type.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    #[error("invalid signature: {0}")]
    InvalidSignature(String),

    #[error("invalid point configuration: {0}")]
    InvalidConfig(String),

    #[error("length mismatch: {0}")]
    LengthMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("function not admissible: {0}")]
    Inadmissible(String),

    #[error("evaluation point within 1e-12 of a pole")]
    PoleProximity,

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("enumeration budget exceeded: {0}")]
    EnumerationBudget(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
