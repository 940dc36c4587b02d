use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("operation not defined for field {0}")]
    UnsupportedField(&'static str),

    #[error("singular leading block in Schur complement")]
    SingularBlock,

    #[error("Gamma function pole at {0}")]
    Pole(String),

    #[error("divergent integral: {0}")]
    Divergent(String),

    #[error("degenerate proposal: {0}")]
    DegenerateProposal(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
