use std::path::PathBuf;

use sde_tv_core::{Error as CoreError, ErrorCategory};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] CoreError),
}

impl LabError {
    /// Process exit status: 2 for configuration and file problems, 3 for
    /// failed preconditions, 4 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::Config(_) | LabError::Io { .. } => EXIT_CONFIG,
            LabError::Core(e) => match e.category() {
                ErrorCategory::Config => EXIT_CONFIG,
                ErrorCategory::Precondition => EXIT_PRECONDITION,
                ErrorCategory::Solver => EXIT_SOLVER,
            },
        }
    }
}
