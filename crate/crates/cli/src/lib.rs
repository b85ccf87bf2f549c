//! Scenario layer over the solver: configuration files, the built-in
//! example library, batch running and convergence studies.

use thiserror::Error;

pub mod io;
pub mod runner;
pub mod scenario;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid scenario at `{path}`: {message}")]
    Validation { path: String, message: String },
    #[error("solver error: {0}")]
    Solver(#[from] fronttrack_core::error::SolverError),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
