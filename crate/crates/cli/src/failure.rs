//! Command failures and their exit codes.

use std::fmt;

use incident_fusion::Error;

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_MISSING: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn missing(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_MISSING,
            message: message.into(),
        }
    }
}

impl Failure {
    /// Prefix the message with the file it concerns.
    pub fn context(mut self, path: &std::path::Path) -> Self {
        self.message = format!("{}: {}", path.display(), self.message);
        self
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

fn code_of(e: &Error) -> u8 {
    match e {
        Error::Fold { source, .. } => code_of(source),
        Error::Numerical(_) | Error::Singular { .. } | Error::Metric(_) => EXIT_NUMERICAL,
        Error::Io(io) if io.kind() == std::io::ErrorKind::NotFound => EXIT_MISSING,
        _ => EXIT_INPUT,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: code_of(&e),
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}
