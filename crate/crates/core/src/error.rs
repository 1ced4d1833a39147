use std::path::PathBuf;

use thiserror::Error;

use crate::krylov::SolveReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("degenerate geometry: {0}")]
    Geometry(String),

    #[error(
        "placement failed: {placed} of {requested} inclusions placed within the budget of {attempts} attempts"
    )]
    Capacity {
        attempts: usize,
        placed: usize,
        requested: usize,
    },

    #[error(
        "GMRES did not converge in {} iterations (relative residual {:.3e})",
        .report.iterations,
        .report.final_residual()
    )]
    Convergence { report: SolveReport },

    #[error("validation failed: {0}")]
    Validation(String),

    #[error("I/O error on {}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
