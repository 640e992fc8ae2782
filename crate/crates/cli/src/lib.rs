//! Configuration, snapshot persistence and the commands behind the `sel3d`
//! binary.

use std::path::{Path, PathBuf};

use thiserror::Error;

pub mod config;
pub mod diagnose;
pub mod scan;
pub mod simulate;
pub mod snapshot;
pub mod stats;

pub use config::{ConfigError, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("simulation stopped: {0}")]
    Instability(sel3d_core::Error),

    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },

    #[error("{0}")]
    Input(String),

    #[error(transparent)]
    Core(sel3d_core::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn format(path: &Path, message: impl Into<String>) -> Self {
        CliError::Format {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }

    /// 2 for bad configuration or parameters, 3 for instability, 4 for I/O
    /// and unreadable inputs.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Core(_) => 2,
            CliError::Instability(_) => 3,
            CliError::Io { .. } | CliError::Format { .. } | CliError::Input(_) => 4,
        }
    }
}

impl From<sel3d_core::Error> for CliError {
    fn from(e: sel3d_core::Error) -> Self {
        match e {
            sel3d_core::Error::Instability { .. } => CliError::Instability(e),
            other => CliError::Core(other),
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(format!("csv: {e}"))
    }
}

/// Opens a CSV writer on `path`, creating parent directories.
pub(crate) fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

/// Shortest round-trip rendering of a float, as used in every CSV.
pub(crate) fn num(x: f64) -> String {
    format!("{x:?}")
}
