//! Command-line front end for `bcheun`: spectra, wavefunctions, turning
//! points and the verification suite as CSV or JSON tables.

// `!(x > 0.0)` is used on purpose so NaN falls into the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod run;
pub mod table;

use std::fmt;

pub use config::{Cli, Command, Format, IndexRange, RunConfig};
pub use run::{run, Report};
pub use table::{Cell, Table};

#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Config(String),
    Solver(String),
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Verification(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Solver(m) => write!(f, "solver error: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<bcheun::Error> for CliError {
    fn from(e: bcheun::Error) -> Self {
        CliError::Solver(e.to_string())
    }
}
