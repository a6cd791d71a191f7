//! CLI error type carrying the process exit code.

use std::fmt;

/// Exit codes: 2 config error, 3 input error, 4 stage failure.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: String) -> CliError {
        CliError { code: 2, message }
    }

    pub fn input(message: String) -> CliError {
        CliError { code: 3, message }
    }

    pub fn stage(stage: &str, err: impl fmt::Display) -> CliError {
        CliError { code: 4, message: format!("stage {stage} failed: {err}") }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CliError {}
