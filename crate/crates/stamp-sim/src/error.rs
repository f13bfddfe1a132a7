//! Simulation-harness errors.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid design: {0}")]
    Design(String),

    /// The binary-outcome cohort produced too few cases even after the
    /// retry doublings.
    #[error("cohort of {cohort} produced {found} cases, {needed} needed")]
    InsufficientCases {
        cohort: usize,
        found: usize,
        needed: usize,
    },

    #[error(transparent)]
    Core(#[from] stamp_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("could not parse {path}: {message}")]
    Parse { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, SimError>;
