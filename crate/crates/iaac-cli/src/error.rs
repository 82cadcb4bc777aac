//! Error taxonomy mapped to process exit codes.
//!
//! 0 success, 1 a check the run was asked to enforce failed, 2 the
//! configuration is unusable, 3 something went wrong while running.
//! clap's own usage errors also exit with 2.

use std::fmt;
use std::path::Path;

#[derive(Debug)]
pub enum CliError {
    /// Bad or inconsistent configuration; nothing was run.
    Config(String),
    /// Failure during execution or while writing artifacts.
    Runtime(String),
    /// The run finished but an enforced acceptance check came out negative.
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Check(_) => 1,
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    pub fn config(msg: impl fmt::Display) -> Self {
        CliError::Config(msg.to_string())
    }

    pub fn runtime(msg: impl fmt::Display) -> Self {
        CliError::Runtime(msg.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
            CliError::Check(m) => write!(f, "check failed: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Annotates io errors with the path they concern.
pub fn io_err(path: &Path, err: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {err}", path.display()))
}
