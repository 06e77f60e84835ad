use std::process::ExitCode;

use thiserror::Error;

/// Failure of a CLI run, split by exit status.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration, input file or output location.
    #[error("configuration error: {0}")]
    Config(String),
    /// The computation itself failed.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        CliError::Numeric(msg.into())
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Numeric(_) => ExitCode::from(3),
        }
    }
}

impl From<lfi_core::Error> for CliError {
    fn from(e: lfi_core::Error) -> Self {
        use lfi_core::Error as E;
        match e {
            E::InvalidConfig(_) | E::Csv(_) | E::Io(_) => CliError::Config(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Attach context to a library result.
pub trait Context<T> {
    fn context(self, what: &str) -> Result<T>;
}

impl<T> Context<T> for lfi_core::Result<T> {
    fn context(self, what: &str) -> Result<T> {
        self.map_err(|e| match CliError::from(e) {
            CliError::Config(m) => CliError::Config(format!("{what}: {m}")),
            CliError::Numeric(m) => CliError::Numeric(format!("{what}: {m}")),
        })
    }
}
