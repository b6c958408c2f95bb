use std::fmt;
use std::path::Path;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    Parameter(String),
    Overflow(String),
    Io(String),
}

impl CliError {
    pub fn param(msg: impl Into<String>) -> Self {
        CliError::Parameter(msg.into())
    }

    pub fn io(path: &Path, err: impl fmt::Display) -> Self {
        CliError::Io(format!("{}: {err}", path.display()))
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Parameter(_) => ExitCode::from(2),
            CliError::Overflow(_) => ExitCode::from(3),
            CliError::Io(_) => ExitCode::from(1),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parameter(m) => write!(f, "parameter error: {m}"),
            CliError::Overflow(m) => write!(f, "{m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<eplsim_core::Error> for CliError {
    fn from(e: eplsim_core::Error) -> Self {
        match e {
            eplsim_core::Error::TruncationOverflow { .. } => CliError::Overflow(e.to_string()),
            other => CliError::Parameter(other.to_string()),
        }
    }
}
