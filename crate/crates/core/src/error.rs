use std::io;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CoreError>;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("link index {index} out of range (lattice has {n_links} links)")]
    LinkOutOfRange { index: usize, n_links: usize },

    #[error("length mismatch: expected {expected}, found {found} ({context})")]
    LengthMismatch {
        expected: usize,
        found: usize,
        context: String,
    },

    #[error("{n_free} free links exceed the enumeration cap of {cap} (set Z2Q_MAX_FREE_LINKS to override)")]
    CapExceeded { n_free: usize, cap: usize },

    #[error("malformed ensemble header: {0}")]
    MalformedHeader(String),

    #[error("malformed configuration line {line}: {reason}")]
    MalformedConfig { line: usize, reason: String },

    #[error("checksum mismatch: header says {expected:08x}, body hashes to {found:08x}")]
    ChecksumMismatch { expected: u32, found: u32 },

    #[error("too few samples: need at least {needed}, have {found}")]
    TooFewSamples { needed: usize, found: usize },

    #[error(
        "eigensolver did not converge after {iterations} iterations (residual norm {residual:.3e})"
    )]
    NonConvergence { iterations: usize, residual: f64 },

    #[error(transparent)]
    Io(#[from] io::Error),
}
