use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;
use unfold_core::Error as CoreError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Core(#[from] CoreError),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// 2 config validation, 3 infeasible target, 4 solver failure, 5 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => 2,
            CliError::Io { .. } => 5,
            CliError::Core(e) => match e {
                CoreError::InvalidInput(_)
                | CoreError::ResolutionMismatch { .. }
                | CoreError::InvalidIntensity(_)
                | CoreError::Parse(_) => 2,
                CoreError::InfeasibleTarget { .. } => 3,
                CoreError::DiagonalSingularity { .. }
                | CoreError::IllPosedDiscretization { .. }
                | CoreError::SingularHessian { .. }
                | CoreError::ExponentOverflow { .. } => 4,
                CoreError::Io(_) => 5,
            },
        }
    }
}
