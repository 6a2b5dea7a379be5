//! Error type shared by every module of the crate.

use thiserror::Error;

/// Errors produced by field operators, curvature evaluation, potentials and geometry.
#[derive(Debug, Error)]
pub enum Error {
    /// Too few nodes to apply the requested stencil.
    #[error("degenerate grid: need at least {needed} nodes, got {got}")]
    DegenerateGrid { needed: usize, got: usize },

    /// Dimension is not an even integer ≥ 2.
    #[error("invalid dimension {0}: must be even and at least 2")]
    InvalidDimension(usize),

    /// Operation only defined in specific dimensions.
    #[error("{op} is not supported in dimension {n}")]
    UnsupportedDimension { op: &'static str, n: usize },

    /// Requested radius lies outside the range a profile can evaluate.
    #[error("radius {r} outside covered range [{lo}, {hi}]")]
    Coverage { r: f64, lo: f64, hi: f64 },

    /// Two profiles were combined on different node sets.
    #[error("node mismatch: {0}")]
    NodeMismatch(String),

    /// A profile, density or config violated its invariants.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Parameter outside its admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A curvature identity residual exceeded its tolerance.
    #[error("identity residual {residual:e} exceeds tolerance {tol:e} ({which})")]
    Identity {
        which: &'static str,
        residual: f64,
        tol: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Rejects odd or too small dimensions.
pub(crate) fn check_dimension(n: usize) -> Result<()> {
    if n < 2 || n % 2 != 0 {
        Err(Error::InvalidDimension(n))
    } else {
        Ok(())
    }
}
