use std::fmt;

use kinvis_core::session_store::RegistryError;

/// Process exit codes.
pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_PARSE: u8 = 2;
pub const EXIT_IO: u8 = 3;

/// A command failure carrying the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn parse(message: impl fmt::Display) -> Self {
        Self { code: EXIT_PARSE, message: message.to_string() }
    }

    pub fn io(message: impl fmt::Display) -> Self {
        Self { code: EXIT_IO, message: message.to_string() }
    }

    pub fn other(message: impl fmt::Display) -> Self {
        Self { code: EXIT_FAILURE, message: message.to_string() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<RegistryError> for CliError {
    fn from(err: RegistryError) -> Self {
        match &err {
            RegistryError::Io { .. } => Self::io(err),
            RegistryError::Document { .. } | RegistryError::RecordCount { .. } | RegistryError::Invalid(_) => Self::parse(err),
            RegistryError::Duplicate(_) | RegistryError::NotFound(_) => Self::other(err),
        }
    }
}
