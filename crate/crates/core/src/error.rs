use std::io;

use thiserror::Error;

/// Errors produced by the ranking engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error: {0}")]
    Io(#[from] io::Error),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("data error: {0}")]
    Data(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("training diverged at epoch {epoch}: objective = {value}")]
    Divergence { epoch: usize, value: f64 },

    #[error("empty split: no user has at least {required} ratings")]
    EmptySplit { required: usize },

    #[error("undefined metric: {0}")]
    UndefinedMetric(String),

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            line,
            msg: msg.into(),
        }
    }
}
