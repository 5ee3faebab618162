//! Command-line layer over `nucresp-core`: configuration files, output
//! formats, run manifests, parallel trajectory sweeps and the verification
//! suite.

pub mod commands;
pub mod config;
pub mod manifest;
pub mod sweep;
pub mod verify;

use std::fmt;

/// Exit code 2 for configuration problems, 1 for everything else.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<nucresp_core::Error> for CliError {
    fn from(e: nucresp_core::Error) -> Self {
        match e {
            nucresp_core::Error::InvalidConfig(m) => CliError::Config(m),
            e => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
