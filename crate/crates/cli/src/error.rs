use std::path::Path;

use thiserror::Error;

/// Exit codes shared by all subcommands.
pub mod exit {
    pub const OK: u8 = 0;
    pub const CONFIG: u8 = 1;
    pub const MAX_ITER: u8 = 2;
    pub const SOLVER_FAILURE: u8 = 3;
    pub const CHECK_FAILED: u8 = 4;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },

    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },

    #[error("{name}: {source}", name = .source.name())]
    Numerical {
        #[from]
        source: matsimplex::Error,
    },
}

impl CliError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        let path = path.into();
        CliError::Config {
            path: if path.is_empty() { ".".into() } else { path },
            message: message.into(),
        }
    }

    pub fn io(path: &Path, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Io { .. } => exit::CONFIG,
            CliError::Numerical { .. } => exit::SOLVER_FAILURE,
        }
    }
}
