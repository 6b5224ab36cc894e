//! Library side of the `lmmf` command: file format, reports, and the four
//! subcommands. `main.rs` only parses arguments and prints.
//!
//! Exit codes: 0 success, 1 property failure or counterexample, 2 input or
//! argument error, 3 internal consistency failure.

pub mod commands;
pub mod format;
pub mod report;

use lmmf::{HarnessError, OracleError, SolveError};
use thiserror::Error;

pub use commands::{
    audit, cmd_allocate, cmd_audit, cmd_generate, cmd_manipulate, parse_grid, AuditEntry,
    AuditOptions, AuditReport, AuditStatus, Family, GenerateOptions, ManipulateOptions,
    ManipulateReport, MechanismChoice, Property,
};
pub use format::{format_rational, parse_instance, parse_rational, read_instance, serialize_instance, Frac};
pub use report::{build_report, AllocationReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{location}: {message}")]
    Parse { location: String, message: String },
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid instance: {0}")]
    Invalid(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Internal(_) => EXIT_INTERNAL,
            _ => EXIT_INPUT,
        }
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        match e {
            SolveError::Instance(e) => CliError::Invalid(e.to_string()),
            other => CliError::Internal(other.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Solve(e) => e.into(),
            OracleError::Instance(e) => CliError::Invalid(e.to_string()),
            other => CliError::Argument(other.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Solve(e) => e.into(),
            HarnessError::Oracle(e) => e.into(),
            HarnessError::Instance(e) => CliError::Invalid(e.to_string()),
            other => CliError::Argument(other.to_string()),
        }
    }
}
