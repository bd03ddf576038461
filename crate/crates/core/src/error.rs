use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported gate: {0}")]
    UnsupportedGate(String),

    #[error("malformed gate: {0}")]
    MalformedGate(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("infeasible block: {0}")]
    InfeasibleBlock(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("cross-rank buffer of 2^{buffer} amplitudes cannot hold {pairs} swap pairs")]
    InfeasibleBuffer { buffer: usize, pairs: usize },

    #[error("state of {0} qubits is out of range")]
    StateSize(usize),

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse { line, message: message.into() }
    }
}
