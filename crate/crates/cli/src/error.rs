use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Core(#[from] cfrank::Error),
}

pub type Result<T> = std::result::Result<T, CliError>;

impl CliError {
    /// 0 success, 1 usage, 2 data, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        use cfrank::Error as E;
        match self {
            CliError::Usage(_) | CliError::Core(E::Config(_)) => 1,
            CliError::Core(E::Divergence { .. } | E::UndefinedMetric(_)) => 3,
            CliError::File { .. } | CliError::Core(_) => 2,
        }
    }
}

pub fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}
