use thiserror::Error;

/// Errors raised by the possibilistic and probabilistic filtering code.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A parameter violates its documented domain (dimension, SPD-ness, range).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// A decomposition failed on values that passed validation.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
