//! Error types shared across the crate.

use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Broad error category used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    /// Bad usage, bad configuration, bad arguments. Exit code 1.
    Usage,
    /// Malformed or inconsistent input data. Exit code 2.
    Data,
    /// Training failure (divergence). Exit code 3.
    Training,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Usage => 1,
            ErrorCategory::Data => 2,
            ErrorCategory::Training => 3,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid snapshot: {0}")]
    InvalidSnapshot(String),

    #[error("invalid tick grid: {0}")]
    InvalidGrid(String),

    #[error("price {value} is not on the tick grid (tick size {tick_size}){}", location_suffix(.line))]
    OffGridPrice {
        value: String,
        tick_size: String,
        line: Option<usize>,
    },

    #[error("volume {value} is not a whole number of volume units{}", location_suffix(.line))]
    OffGridVolume {
        value: String,
        line: Option<usize>,
    },

    #[error("parse error at line {line}, field {field}: {message}")]
    Parse {
        line: usize,
        field: usize,
        message: String,
    },

    #[error("malformed matrix: {0}")]
    MalformedMatrix(String),

    #[error("unknown horizon {0}: expected one of 10, 20, 30, 50, 100")]
    UnknownHorizon(usize),

    #[error("unknown fixture name '{0}'")]
    UnknownFixture(String),

    #[error("incomplete snapshot: {side} side has {got} levels, depth is {expected}")]
    IncompleteSnapshot {
        side: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("index out of range: {0}")]
    Range(String),

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("class label code {0} is not in {{1, 2, 3}}")]
    InvalidLabel(u8),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("training diverged at epoch {epoch}: loss is not finite")]
    Divergence { epoch: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing file: {0}")]
    MissingFile(PathBuf),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

fn location_suffix(line: &Option<usize>) -> String {
    match line {
        Some(n) => format!(" at line {n}"),
        None => String::new(),
    }
}

impl Error {
    /// Wrap an error with the pipeline stage it occurred in.
    pub fn in_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) | Error::UnknownFixture(_) | Error::UnknownHorizon(_) => {
                ErrorCategory::Usage
            }
            Error::Divergence { .. } => ErrorCategory::Training,
            Error::Stage { source, .. } => source.category(),
            _ => ErrorCategory::Data,
        }
    }
}
