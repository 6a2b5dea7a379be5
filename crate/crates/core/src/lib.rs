//! Numerical laboratory for conformally flat metrics `e^{2u}|dx|²` on ℝⁿ, n even.
//!
//! The crate computes scalar, Q- and σ₂-curvatures of radial conformal factors, builds
//! conformal factors as logarithmic potentials of a Q-density, measures how far a metric
//! is from being such a potential ("normal"), and evaluates the integral geometry
//! (volumes, isoperimetric ratio, total curvature, boundary flux) tying them together.

pub mod constants;
pub mod curvature;
pub mod error;
pub mod field;
pub mod geometry;
pub mod jet;
pub mod potential;
pub mod quadrature;
pub mod zoo;

pub use error::{Error, Result};
