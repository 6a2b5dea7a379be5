//! Dimensional constants and the normalization convention used throughout.
//!
//! For every even n the crate uses
//!
//! * (−Δ)^{n/2} u = 2 Q_g e^{nu},
//! * (−Δ)^{n/2} log(1/|x|) = 2 c_n δ₀,
//! * c_n = 2^{n−2} ((n−2)/2)! π^{n/2}  (so c₂ = π, c₄ = 4π²).
//!
//! With these choices the round sphere has (1/c_n)∫Q dv = 2 and a potential-built metric
//! satisfies Q e^{nu} = P exactly.

use serde::Serialize;

use crate::error::{check_dimension, Result};

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// c_n = 2^{n−2}((n−2)/2)! π^{n/2}.
pub fn c_n(n: usize) -> Result<f64> {
    check_dimension(n)?;
    let k = n / 2;
    Ok(2f64.powi(n as i32 - 2) * factorial(k - 1) * std::f64::consts::PI.powi(k as i32))
}

/// Volume of the unit ball in ℝⁿ (n even): π^{n/2}/(n/2)!.
pub fn omega_n(n: usize) -> Result<f64> {
    check_dimension(n)?;
    let k = n / 2;
    Ok(std::f64::consts::PI.powi(k as i32) / factorial(k))
}

/// Area of the unit sphere S^{n−1}, nω_n.
pub fn sphere_area(n: usize) -> Result<f64> {
    Ok(n as f64 * omega_n(n)?)
}

/// Euler characteristic of ℝⁿ.
pub const CHI: f64 = 1.0;

/// Echo of the normalization convention, embedded in every JSON report.
#[derive(Clone, Debug, Serialize)]
pub struct Conventions {
    pub n: usize,
    pub c_n: f64,
    pub omega_n: f64,
    pub curvature_equation: &'static str,
    pub fundamental_solution: &'static str,
    pub scalar_curvature: &'static str,
    pub isoperimetric_ratio: &'static str,
}

impl Conventions {
    pub fn for_dimension(n: usize) -> Result<Self> {
        Ok(Conventions {
            n,
            c_n: c_n(n)?,
            omega_n: omega_n(n)?,
            curvature_equation: "(-Δ)^{n/2} u = 2 Q e^{nu}",
            fundamental_solution: "(-Δ)^{n/2} log(1/|x|) = 2 c_n δ",
            scalar_curvature: "R = -2(n-1) e^{-2u} (Δu + (n-2)/2 |∇u|²)",
            isoperimetric_ratio: "I(r) = Area^{n/(n-1)} / (n (n ω_n)^{1/(n-1)} Vol)",
        })
    }
}
