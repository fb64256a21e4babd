use std::path::PathBuf;

use thiserror::Error;
use torsionfield_core::random_field::RealizationRecord;

/// Exit status for a run that completed and passed.
pub const EXIT_OK: i32 = 0;
/// Exit status when a check fails or a realization is degenerate under `abort`.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// Exit status for usage and configuration errors.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid config at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Core(#[from] torsionfield_core::Error),

    #[error("cannot access {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),

    /// Raised where a realization is drawn; the command layer dumps the
    /// record and turns it into [`CliError::DegenerateAbort`].
    #[error("degenerate realization (seed {:?}, min epsilon {})", .0.seed, .0.min_eps)]
    Degenerate(Box<RealizationRecord>),

    #[error("degenerate realization (seed {seed:?}, min epsilon {min_eps}) under policy abort; dumped to {}", dump.display())]
    DegenerateAbort { seed: Option<u64>, min_eps: f64, dump: PathBuf },

    #[error("{failed} asserting check(s) failed")]
    ChecksFailed { failed: usize },
}

impl CliError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config { path: path.into(), message: message.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io { path: path.into(), source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config { .. } | Self::Usage(_) => EXIT_USAGE,
            Self::Core(torsionfield_core::Error::DegenerateRealization { .. }) => EXIT_CHECK_FAILED,
            Self::Core(_) => EXIT_USAGE,
            Self::Io { .. } | Self::Csv(_) => EXIT_CHECK_FAILED,
            Self::Degenerate(_) | Self::DegenerateAbort { .. } | Self::ChecksFailed { .. } => EXIT_CHECK_FAILED,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
