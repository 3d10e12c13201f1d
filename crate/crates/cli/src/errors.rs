//! Error-to-exit-code mapping for the command line front end.
//!
//! Exit codes: 0 success, 2 input error (bad data files, inconsistent
//! dimensions, invalid parameter values), 3 numerical failure inside a
//! solver, 4 configuration error (unreadable or malformed config file).

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Input(String),
    Numerical(String),
    Config(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Config(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "input error: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            CliError::Config(msg) => write!(f, "config error: {msg}"),
        }
    }
}

impl From<nsgcca::Error> for CliError {
    fn from(err: nsgcca::Error) -> Self {
        match err {
            nsgcca::Error::NumericalFailure(msg) => CliError::Numerical(msg),
            nsgcca::Error::NotPsd(msg) => CliError::Numerical(msg),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Input(err.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
