use std::path::PathBuf;

use tempco::{FilterError, LossError, MetricsError, StreamError, SynthError};

/// Top-level CLI error. Validation problems exit with code 1, I/O problems
/// with code 2; success is 0.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Stream(#[from] StreamError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

impl CliError {
    /// Maps the error to its process exit code. I/O failures wrapped by the
    /// library parsers still count as I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. }
            | CliError::Stream(StreamError::Io(_))
            | CliError::Loss(LossError::Io(_))
            | CliError::Metrics(MetricsError::Stream(StreamError::Io(_))) => 2,
            _ => 1,
        }
    }
}
