//! Scalar fields on ℝⁿ and the discrete operators that act on them.
//!
//! Radial fields come in two flavours that share the [`RadialFunction`] trait:
//! closed-form closures evaluated through [`Jet`]s, and sampled [`RadialProfile`]s whose
//! derivatives are taken with fourth-order finite-difference stencils. Full-dimensional
//! fields ([`AnalyticField`], [`GridField`]) exist for spherical means and oracles.

mod analytic;
mod grid;
mod ops;
mod profile;

use std::fmt;
use std::sync::Arc;

pub use analytic::{sphere_average, sphere_average_with, AnalyticField, PointFn, SphereRule};
pub use grid::GridField;
pub use ops::{
    annulus_average, fornberg_weights, radial_derivatives, radial_gradient_norm_sq,
    radial_laplacian, radial_polyharmonic, Polyharmonic,
};
pub use profile::{fmt_f64, NodeLayout, RadialProfile};
pub(crate) use ops::annulus_mean;

use crate::jet::Jet;

/// A scalar function of the radius `r ≥ 0`.
pub trait RadialFunction: Send + Sync {
    /// Taylor jet of the function at `r`, carrying at most `order` derivatives.
    fn jet(&self, r: f64, order: usize) -> Jet;

    fn value(&self, r: f64) -> f64 {
        self.jet(r, 0).value()
    }

    /// Closed interval of radii the function can be evaluated on.
    fn domain(&self) -> (f64, f64) {
        (0.0, f64::INFINITY)
    }

    /// Exact `β log r + c` behaviour beyond some radius, if known.
    fn log_tail(&self) -> Option<LogTail> {
        None
    }

    /// Radii where the function is less smooth; quadrature splits there.
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

/// `β·log r + c` for `r ≥ r_max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogTail {
    pub beta: f64,
    pub c: f64,
    pub r_max: f64,
}

impl LogTail {
    pub fn value(&self, r: f64) -> f64 {
        self.beta * r.ln() + self.c
    }

    pub fn jet(&self, r: f64, order: usize) -> Jet {
        Jet::variable(r, order).ln().scale(self.beta).add_scalar(self.c)
    }
}

type JetClosure = dyn Fn(&Jet) -> Jet + Send + Sync;

/// Radial function given as a composition of jet operations on the variable `r`.
#[derive(Clone)]
pub struct JetFn {
    f: Arc<JetClosure>,
    tail: Option<LogTail>,
    breaks: Vec<f64>,
}

impl JetFn {
    pub fn new(f: impl Fn(&Jet) -> Jet + Send + Sync + 'static) -> Self {
        JetFn {
            f: Arc::new(f),
            tail: None,
            breaks: Vec::new(),
        }
    }

    pub fn with_tail(mut self, tail: LogTail) -> Self {
        self.tail = Some(tail);
        self
    }

    pub fn with_breakpoints(mut self, breaks: Vec<f64>) -> Self {
        self.breaks = breaks;
        self
    }
}

impl fmt::Debug for JetFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("JetFn").field("tail", &self.tail).finish()
    }
}

impl RadialFunction for JetFn {
    fn jet(&self, r: f64, order: usize) -> Jet {
        (self.f)(&Jet::variable(r, order))
    }

    fn log_tail(&self) -> Option<LogTail> {
        self.tail
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.breaks.clone()
    }
}

impl<T: RadialFunction + ?Sized> RadialFunction for Arc<T> {
    fn jet(&self, r: f64, order: usize) -> Jet {
        (**self).jet(r, order)
    }
    fn value(&self, r: f64) -> f64 {
        (**self).value(r)
    }
    fn domain(&self) -> (f64, f64) {
        (**self).domain()
    }
    fn log_tail(&self) -> Option<LogTail> {
        (**self).log_tail()
    }
    fn breakpoints(&self) -> Vec<f64> {
        (**self).breakpoints()
    }
}
