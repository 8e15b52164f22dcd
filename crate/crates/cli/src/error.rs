use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::config::ConfigError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;
pub const EXIT_FIT: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("numerical invariant violated: {0}")]
    Invariant(twophoton::Error),

    #[error("fit failed: {0}")]
    FitNotConverged(twophoton::Error),

    #[error("simulation failed: {0}")]
    Simulation(twophoton::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("reading CSV: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) => EXIT_CONFIG,
            CliError::Invariant(_) => EXIT_INVARIANT,
            CliError::FitNotConverged(_) => EXIT_FIT,
            CliError::Simulation(_) | CliError::Io { .. } | CliError::Csv(_) => EXIT_FAILURE,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<twophoton::Error> for CliError {
    fn from(e: twophoton::Error) -> Self {
        use twophoton::Error as E;
        match e {
            E::InvariantViolation { .. } | E::StepSizeUnderflow { .. } | E::CorruptedState(_) => {
                CliError::Invariant(e)
            }
            E::FitNotConverged { .. } => CliError::FitNotConverged(e),
            E::SeriesTooShort(_)
            | E::DegenerateInput(_)
            | E::InvalidParameter(_)
            | E::InvalidGrid(_) => CliError::Input(e.to_string()),
            other => CliError::Simulation(other),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
