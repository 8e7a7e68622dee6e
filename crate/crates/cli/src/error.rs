use std::fmt;

/// Exit status for usage problems (bad flags, out-of-range options).
pub const EXIT_USAGE: i32 = 2;
/// Exit status for unreadable, malformed or inconsistent data.
pub const EXIT_DATA: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(mglda::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
        }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(e) => write!(f, "{e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<mglda::Error> for CliError {
    fn from(e: mglda::Error) -> Self {
        match e {
            mglda::Error::InvalidHyperparams(m) => CliError::Usage(m),
            other => CliError::Data(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(e.into())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(e.into())
    }
}

pub type CliResult<T> = Result<T, CliError>;
