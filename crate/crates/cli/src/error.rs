use std::fmt;
use std::io;

use z2q_core::CoreError;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const OTHER: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const CAP: i32 = 3;
    pub const IO: i32 = 4;
    pub const NON_CONVERGENCE: i32 = 5;
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(CoreError),
    Io(io::Error),
    Csv(csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => exit::USAGE,
            CliError::Io(_) | CliError::Csv(_) => exit::IO,
            CliError::Core(e) => match e {
                CoreError::InvalidLattice(_) | CoreError::InvalidParameter(_) => exit::USAGE,
                CoreError::CapExceeded { .. } => exit::CAP,
                CoreError::Io(_)
                | CoreError::MalformedHeader(_)
                | CoreError::MalformedConfig { .. }
                | CoreError::ChecksumMismatch { .. }
                | CoreError::LengthMismatch { .. } => exit::IO,
                CoreError::NonConvergence { .. } => exit::NON_CONVERGENCE,
                _ => exit::OTHER,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage: {msg}"),
            CliError::Core(e) => e.fmt(f),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Csv(e) => write!(f, "csv error: {e}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Csv(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
