use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Engine(#[from] hce_core::Error),

    #[error("{}:{line}: {message}", path.display())]
    Manifest {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl CliError {
    /// 3 for numerical failures, 2 for everything caused by the inputs.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Engine(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}
