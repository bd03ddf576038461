use std::fmt;
use std::path::Path;

/// Process exit codes.
pub const EXIT_PARSE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_SIMULATION: u8 = 3;
pub const EXIT_VALIDATION: u8 = 4;

/// An error carrying the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn new(code: u8, message: impl Into<String>) -> CliError {
        CliError { code, message: message.into() }
    }

    pub fn config(message: impl Into<String>) -> CliError {
        CliError::new(EXIT_CONFIG, message)
    }

    pub fn io(path: &Path, err: std::io::Error) -> CliError {
        CliError::new(EXIT_PARSE, format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<aicsim::Error> for CliError {
    fn from(err: aicsim::Error) -> CliError {
        use aicsim::Error::*;
        let code = match err {
            UnsupportedGate(_) | MalformedGate(_) | Parse { .. } => EXIT_PARSE,
            Config(_) | InfeasibleBlock(_) | InfeasibleBuffer { .. } => EXIT_CONFIG,
            Contract(_) | StateSize(_) | LengthMismatch(..) => EXIT_SIMULATION,
        };
        CliError::new(code, err.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
