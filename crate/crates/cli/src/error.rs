use std::fmt;

/// Failure of a run, mapped onto the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Invalid flags, config file or parameter combination.
    Config(String),
    /// The library rejected a computation.
    Compute(randcorr::Error),
    /// Reading or writing files.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Compute(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "invalid configuration: {msg}"),
            CliError::Compute(e) => write!(f, "computation failed: {e}"),
            CliError::Io(msg) => write!(f, "i/o error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<randcorr::Error> for CliError {
    fn from(e: randcorr::Error) -> Self {
        match e {
            randcorr::Error::Config(msg) => CliError::Config(msg),
            randcorr::Error::Resource(msg) => CliError::Io(msg),
            other => CliError::Compute(other),
        }
    }
}
