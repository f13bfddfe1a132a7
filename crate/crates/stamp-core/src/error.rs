//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by ingestion, rotation, fitting and testing.
#[derive(Debug, Error)]
pub enum Error {
    /// Input data violated a documented invariant (dimensions, signs, ranges).
    #[error("invalid input: {0}")]
    Validation(String),

    /// The SNP mixing matrix for a study is rank deficient or too ill
    /// conditioned to invert, even after ridge conditioning. The region
    /// needs harder LD pruning.
    #[error("study '{study}': mixing matrix is singular (condition number {condition:.3e}); prune the region harder")]
    SingularOmega { study: String, condition: f64 },

    /// A moment required by the requested regime was not set.
    #[error("missing super-population moment '{field}' required under the {regime} regime")]
    MissingMoment {
        field: &'static str,
        regime: &'static str,
    },

    /// A mixture component variance came out non-positive for admissible
    /// parameters, which indicates inconsistent geometry or moments.
    #[error("non-finite likelihood: component variance {variance:.3e} for study '{study}'")]
    NonFiniteLikelihood { study: String, variance: f64 },

    /// The quadratic mixture is not identifiable: it needs at least two
    /// studies with distinct precision-squared geometry.
    #[error("identifiability: {0}")]
    Identifiability(String),

    /// Weak-null testing was requested without a usable control study.
    #[error("control study: {0}")]
    Control(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("could not parse {path}: {message}")]
    Parse { path: String, message: String },
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
