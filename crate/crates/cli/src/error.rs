use std::path::Path;

use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const DATA: i32 = 3;
    pub const NUMERIC: i32 = 4;
    pub const IO: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Data(_) => exit::DATA,
            CliError::Numeric(_) => exit::NUMERIC,
            CliError::Io(_) => exit::IO,
        }
    }

    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    /// Reclassifies a library error raised while reading a dataset.
    pub fn data(e: ahtsgd::Error) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ahtsgd::Error> for CliError {
    fn from(e: ahtsgd::Error) -> Self {
        use ahtsgd::Error as E;
        match e {
            E::Parameter { .. } | E::Config(_) => CliError::Config(e.to_string()),
            E::Curvature(_) | E::NonFinite(_) => CliError::Numeric(e.to_string()),
            E::Parse { .. } => CliError::Data(e.to_string()),
            E::Io { .. } | E::Csv(_) => CliError::Io(e.to_string()),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}
