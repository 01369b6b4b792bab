use std::path::Path;

use regen_core::Error;
use thiserror::Error as ThisError;

pub const EXIT_BAD_ARGS: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_DECODE: i32 = 4;
pub const EXIT_IO: i32 = 5;

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("{0}")]
    BadArgs(String),
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("decode failure: {0}")]
    Decode(String),
    #[error("{0}")]
    Io(String),
    #[error("bad shard data: {0}")]
    Format(String),
}

impl CliError {
    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(format!("{}: {e}", path.display()))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::BadArgs(_) => EXIT_BAD_ARGS,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::Decode(_) => EXIT_DECODE,
            CliError::Io(_) | CliError::Format(_) => EXIT_IO,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Infeasible { .. } | Error::ConstructionInfeasible(_) => {
                CliError::Infeasible(e.to_string())
            }
            Error::DecodeFailure(_)
            | Error::AmbiguousDecode
            | Error::RepairFailed { .. }
            | Error::ReconstructionFailed(_) => CliError::Decode(e.to_string()),
            Error::Scenario(_) => CliError::Format(e.to_string()),
            _ => CliError::BadArgs(e.to_string()),
        }
    }
}
