use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the simulation and analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("chain length {0} outside supported range 1..=24")]
    ChainLength(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension {0} too large for dense diagonalization (limit 4096)")]
    DimensionTooLarge(usize),

    #[error("site {site} out of range for chain of length {len}")]
    SiteOutOfRange { site: usize, len: usize },

    #[error("subsystem sites must be contiguous and ascending: {0:?}")]
    NonContiguous(Vec<usize>),

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("density matrix invalid: {0}")]
    InvalidDensityMatrix(String),

    #[error("Krylov propagation did not converge over [{t_start}, {t_end}] (error estimate {estimate:e})")]
    Propagation {
        t_start: f64,
        t_end: f64,
        estimate: f64,
    },

    #[error("time grid invalid: {0}")]
    InvalidGrid(String),

    #[error("not enough points: need {needed}, got {got}")]
    InsufficientPoints { needed: usize, got: usize },

    #[error("grid mismatch between {0} and {1}")]
    GridMismatch(PathBuf, PathBuf),

    #[error("missing manifest for {0}")]
    MissingManifest(PathBuf),

    #[error("too many failed realizations: {failed} of {total}")]
    TooManyFailures { failed: usize, total: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
