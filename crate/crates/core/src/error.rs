use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid node set: {0}")]
    InvalidNodeSet(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible generator parameters: {0}")]
    Infeasible(String),

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("state matrix is not Hurwitz (spectral abscissa {abscissa:.6e})")]
    NotHurwitz { abscissa: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("partition is not equitable: {0}")]
    NotEquitable(String),

    #[error("target node {target} is unreachable from every candidate")]
    UnreachableTarget { target: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotHurwitz { .. } | Error::Numerical(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
