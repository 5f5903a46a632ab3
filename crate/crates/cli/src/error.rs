//! Exit codes and the machine-readable error record.

use std::fmt;

use serde_json::json;

/// Input problems exit with this code.
pub const EXIT_INPUT: u8 = 2;
/// Fitting and numerical failures exit with this code.
pub const EXIT_FIT: u8 = 3;

#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or unreadable input.
    Input(String),
    /// A fit or numerical routine failed, or a summary was flagged invalid.
    Fit(String),
    Core(pbcox_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Fit(_) => EXIT_FIT,
            CliError::Core(e) if e.is_input_error() => EXIT_INPUT,
            CliError::Core(_) => EXIT_FIT,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Input(_) => "input",
            CliError::Fit(_) => "fit",
            CliError::Core(e) => e.kind(),
        }
    }

    /// One-line JSON record for stderr.
    pub fn record(&self) -> String {
        json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        })
        .to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) | CliError::Fit(m) => f.write_str(m),
            CliError::Core(e) => write!(f, "{e}"),
        }
    }
}

impl From<pbcox_core::Error> for CliError {
    fn from(e: pbcox_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(format!("i/o error: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(format!("csv error: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Input(format!("json error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
