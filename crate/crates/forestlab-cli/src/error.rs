//! CLI error type carrying the process exit code.

use std::fmt;
use std::path::Path;

/// Exit codes: 0 success, 2 config error, 3 simulation error, 4 I/O error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitCode {
    Config = 2,
    Simulation = 3,
    Io = 4,
}

#[derive(Debug)]
pub struct CliError {
    pub code: ExitCode,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.message)
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn config(message: String) -> Self {
        CliError { code: ExitCode::Config, message }
    }

    pub fn config_msg(err: forestlab::Error) -> Self {
        CliError { code: ExitCode::Config, message: err.to_string() }
    }

    pub fn simulation(err: forestlab::Error) -> Self {
        CliError { code: ExitCode::Simulation, message: format!("simulation failed: {err}") }
    }

    pub fn io(path: &Path, err: std::io::Error) -> Self {
        CliError { code: ExitCode::Io, message: format!("{}: {err}", path.display()) }
    }

    /// Dataset loading: I/O errors map to the I/O code, parse errors to the
    /// config code.
    pub fn io_or_parse(err: forestlab::Error) -> Self {
        match err {
            forestlab::Error::Io(e) => CliError { code: ExitCode::Io, message: e.to_string() },
            other => CliError { code: ExitCode::Config, message: other.to_string() },
        }
    }
}
