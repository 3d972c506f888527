use thiserror::Error;

/// Errors raised by the simulation engine.
///
/// `Invariant` names the violated property so that callers (the CLI in
/// particular) can report which guarantee broke.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operands live on different Fock bases")]
    BasisMismatch,

    #[error("invariant violated ({invariant}): {detail}")]
    Invariant {
        invariant: &'static str,
        detail: String,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn invariant(invariant: &'static str, detail: impl Into<String>) -> Self {
        Error::Invariant {
            invariant,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
