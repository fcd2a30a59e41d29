use std::io;
use std::path::PathBuf;

use splitscan_core::Error as CoreError;

pub const EXIT_FLAGGED: u8 = 3;
pub const EXIT_IO: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_TOO_SHORT: u8 = 4;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: CoreError,
    },

    #[error("{0}")]
    Core(#[from] CoreError),

    #[error("{0}")]
    Io(#[from] io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        let core = match self {
            CliError::Usage(_) => return EXIT_USAGE,
            CliError::Io(_) => return EXIT_IO,
            CliError::File { source, .. } => source,
            CliError::Core(e) => e,
        };
        match core {
            CoreError::FrameTooShort { .. } => EXIT_TOO_SHORT,
            CoreError::InvalidArgument(_) | CoreError::DegenerateSplit(_) => EXIT_USAGE,
            // Unreadable or malformed input files.
            _ => EXIT_IO,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
