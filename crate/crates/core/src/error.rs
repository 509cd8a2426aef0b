use thiserror::Error;

/// Errors raised by the simulation, estimation and ensemble layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient shots: {available} available, at least {required} required")]
    InsufficientShots { required: u64, available: u64 },

    #[error("unsupported size: {n_qubits} qubits exceeds the dense limit of {max}")]
    UnsupportedSize { n_qubits: usize, max: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
