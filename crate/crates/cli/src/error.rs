use std::path::Path;

use flowcast_core::events::EventsError;
use flowcast_core::ingest::IngestError;
use flowcast_core::options::OptionsError;
use flowcast_core::regress::RegressError;
use flowcast_core::series::SeriesError;
use flowcast_core::synth::SynthError;
use thiserror::Error;

/// Fatal command failure. The variant decides the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Estimation(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Estimation(_) => 3,
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        CliError::Validation(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Tags an ingest error with the file it came from.
pub fn ingest(path: &Path, e: IngestError) -> CliError {
    match e {
        IngestError::Io { .. } => CliError::Io(e.to_string()),
        other => CliError::Validation(format!("{}: {other}", path.display())),
    }
}

impl From<SeriesError> for CliError {
    fn from(e: SeriesError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<RegressError> for CliError {
    fn from(e: RegressError) -> Self {
        match e {
            RegressError::Series(s) => s.into(),
            RegressError::InvalidSplit(_) => CliError::Validation(e.to_string()),
            other => CliError::Estimation(other.to_string()),
        }
    }
}

impl From<EventsError> for CliError {
    fn from(e: EventsError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<OptionsError> for CliError {
    fn from(e: OptionsError) -> Self {
        match e {
            OptionsError::NoMatchingQuotes => CliError::Estimation(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        CliError::Validation(e.to_string())
    }
}
