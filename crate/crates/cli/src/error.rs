use std::fmt;

use ggm_core::Error;

/// A message plus the process exit code: 1 for runtime failures, 2 for
/// usage and domain errors.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: 2, message: message.into() }
    }

    pub fn runtime(message: impl Into<String>) -> Self {
        CliError { code: 1, message: message.into() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Domain(_) | Error::Usage(_) | Error::Parse { .. } | Error::TooLarge { .. } => 2,
            Error::Numeric(_) | Error::NoConvergence { .. } | Error::Io(_) | Error::Json(_) => 1,
        };
        CliError { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::runtime(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::runtime(e.to_string())
    }
}
