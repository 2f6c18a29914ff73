use std::path::Path;

use thiserror::Error;

/// Failure of a subcommand, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] pisco_core::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    /// 2 for usage and configuration, 3 for I/O and malformed files, 4 for
    /// numerical failure.
    pub fn exit_code(&self) -> i32 {
        use pisco_core::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Core(e) => match e {
                E::Io { .. } | E::BadMagic { .. } | E::TruncatedPayload { .. } | E::UnknownDtype { .. } | E::Manifest(_) => 3,
                E::NonFiniteLoss { .. } | E::SingularSystem { .. } => 4,
                _ => 2,
            },
        }
    }
}
