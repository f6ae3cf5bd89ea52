//! IO, configuration and the experiment subcommands behind the `pradp`
//! binary. Everything numerical lives in `pradp-core`; this crate only
//! wires it to files.

pub mod commands;
pub mod config;
pub mod csvio;

use std::fmt;

/// CLI failure classes; they decide the process exit code
/// (`0` success, `2` validation, `3` numerical, `1` IO).
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(msg) => write!(f, "validation error: {msg}"),
            CliError::Numerical(msg) => write!(f, "numerical error: {msg}"),
            CliError::Io(msg) => write!(f, "io error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err.to_string())
    }
}

impl From<pradp_core::Error> for CliError {
    fn from(err: pradp_core::Error) -> Self {
        use pradp_core::Error as E;
        match err {
            E::RiccatiNoConvergence { .. }
            | E::IllConditioned { .. }
            | E::PolicyUndefined
            | E::ExcitationInsufficient { .. }
            | E::LspiNoConvergence { .. }
            | E::DiscretizationSingular => CliError::Numerical(err.to_string()),
            _ => CliError::Validation(err.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
