//! Library half of the `gestark` command-line tool: configuration schema,
//! command implementations, and output rendering. The binary in `main.rs`
//! is a thin argument-parsing shell over these.

pub mod commands;
pub mod config;
pub mod render;

use std::fmt;

/// CLI error categories, each with its own process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or input data (exit code 2).
    Config(String),
    /// Numeric or rank failure (exit code 3).
    Numeric(String),
    /// Filesystem failure (exit code 4).
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numeric(m) => write!(f, "numeric error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<gestark::Error> for CliError {
    fn from(err: gestark::Error) -> Self {
        use gestark::Error as E;
        match err {
            E::RankDeficient(_)
            | E::NonPositiveSigma { .. }
            | E::InsufficientDegreesOfFreedom { .. }
            | E::UnpairedLines { .. }
            | E::DuplicateRow { .. }
            | E::InvalidWeights { .. }
            | E::AsymmetricTensor { .. }
            | E::NotUnitLength { .. }
            | E::InvalidGValues { .. }
            | E::CalibrationFailed(_) => CliError::Numeric(err.to_string()),
            E::Io(_) => CliError::Io(err.to_string()),
            _ => CliError::Config(err.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
