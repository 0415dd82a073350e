//! Error types shared across the toolkit.

use std::path::PathBuf;
use thiserror::Error;

/// Every failure mode in the toolkit, grouped by the exit-code category the
/// CLI maps it to: config (2), data (3), numerical (4).
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid pipeline configuration. Carries every violation found, not
    /// just the first.
    #[error("config error:\n{}", .0.join("\n"))]
    Config(Vec<String>),

    /// File could not be read or written.
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A file did not conform to its schema. `row` is the 1-based data row
    /// (header excluded) when known.
    #[error("{path}: {}{message}", .row.map(|r| format!("row {r}: ")).unwrap_or_default())]
    Parse {
        path: PathBuf,
        row: Option<usize>,
        message: String,
    },

    /// In-memory data violated an invariant (referential integrity, missing
    /// coverage, bad argument).
    #[error("data error: {0}")]
    Data(String),

    /// A numerical precondition failed (rank deficiency, degrees of freedom,
    /// log of zero).
    #[error("numerical error: {0}")]
    Numeric(String),

    /// An error wrapped with the pipeline stage it occurred in, e.g.
    /// "ingest/stations".
    #[error("stage {stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn parse(path: impl Into<PathBuf>, row: Option<usize>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            row,
            message: message.into(),
        }
    }

    pub(crate) fn in_stage(self, stage: &str) -> Self {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }

    /// Process exit code for the CLI: 2 config, 3 data, 4 numerical.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::Io { .. } | Error::Parse { .. } | Error::Data(_) => 3,
            Error::Numeric(_) => 4,
            Error::Stage { source, .. } => source.exit_code(),
        }
    }

    /// Innermost stage label, if any.
    pub fn stage(&self) -> Option<&str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
