use std::path::{Path, PathBuf};

use sdfp_core::{IpmError, Phase1Error, ProblemError, SdlcpError};
use thiserror::Error;

/// Process exit codes. Every outcome maps to exactly one of them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Exit {
    Solved = 0,
    /// Malformed or invalid input.
    Input = 1,
    NoOptimalSolution = 2,
    /// No strictly feasible dual start could be established, or the
    /// generator ran out of attempts.
    NotStrictlyFeasible = 3,
    /// A numerical invariant or a check failed, or the iteration budget
    /// ran out.
    Breach = 4,
}

impl Exit {
    pub fn code(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Parse { path: PathBuf, message: String },
    #[error("SDPA cost matrix is nonzero (largest entry {largest:e}); only feasibility problems are supported")]
    NonZeroCost { largest: f64 },
    #[error("invalid problem: {0}")]
    Problem(#[from] ProblemError),
    #[error("phase I: {0}")]
    Phase1(#[from] Phase1Error),
    #[error("solver: {0}")]
    Ipm(#[from] IpmError),
    #[error("sdlcp: {0}")]
    Sdlcp(#[from] SdlcpError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn parse(path: &Path, message: impl Into<String>) -> Self {
        CliError::Parse {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }

    pub fn exit(&self) -> Exit {
        match self {
            CliError::Io { .. }
            | CliError::Parse { .. }
            | CliError::NonZeroCost { .. }
            | CliError::Usage(_) => Exit::Input,
            CliError::Problem(ProblemError::GenerationFailed { .. }) => Exit::NotStrictlyFeasible,
            CliError::Problem(_) => Exit::Input,
            CliError::Phase1(e) => phase1_exit(e),
            CliError::Ipm(_) | CliError::Sdlcp(_) => Exit::Breach,
        }
    }
}

pub fn phase1_exit(e: &Phase1Error) -> Exit {
    match e {
        Phase1Error::NotStrictlyFeasible { .. } | Phase1Error::Inconclusive { .. } => Exit::NotStrictlyFeasible,
        Phase1Error::Problem(_) => Exit::Input,
        _ => Exit::Breach,
    }
}
