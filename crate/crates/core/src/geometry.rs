//! Integral geometry of a radial conformal metric.
//!
//! Areas of coordinate spheres, volumes of coordinate balls, the normalized isoperimetric
//! ratio, total curvature integrals with convergence flags, the deficit identity
//! `χ − (1/c_n)∫Q dv = lim I(r)`, the boundary flux of `Δ_gR` (n = 4) and the Hölder
//! bound on annulus integrals of `Δu`.
//!
//! The ratio is normalized so that flat space has `I ≡ 1`:
//!
//! ```text
//! I(r) = Area(∂B_r)^{n/(n−1)} / (n (nω_n)^{1/(n−1)} Vol(B_r)).
//! ```

use std::fmt::Write as _;

use serde::Serialize;

use crate::constants::{c_n, sphere_area, Conventions, CHI};
use crate::curvature::{ConformalMetric, PointCurvature};
use crate::error::{Error, Result};
use crate::field::fmt_f64;
use crate::quadrature::{
    adaptive_with_breaks, improper, improper_scaled, pairwise_sum, Convergence, Tolerance,
};

/// Relative accuracy of finite radial quadratures.
const QUAD_REL: f64 = 1e-11;
/// Relative accuracy requested from improper integrals.
const TAIL_REL: f64 = 1e-10;
/// Outermost radius probed when deciding convergence of an improper integral.
const TAIL_CAP: f64 = 1e15;

/// Tri-state outcome of a hypothesis check.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Flag {
    Holds,
    Fails,
    DivergesNumerically,
}

/// An integral over ℝⁿ with its error estimate and convergence flag.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvatureIntegral {
    pub value: f64,
    pub error: f64,
    pub flag: Flag,
    /// Radius the integral extends to (∞ unless the metric's data ends earlier).
    pub upper: f64,
}

impl CurvatureIntegral {
    pub fn converged(&self) -> bool {
        self.flag != Flag::DivergesNumerically
    }

    fn scaled(mut self, s: f64) -> Self {
        self.value *= s;
        self.error *= s.abs();
        self
    }
}

fn metric_breaks(m: &ConformalMetric, a: f64, b: f64) -> Vec<f64> {
    let mut breaks = vec![a];
    let mb = m.breakpoints();
    if mb.len() <= 4096 {
        breaks.extend(mb.into_iter().filter(|&x| x > a && x < b));
    } else {
        // sampled tables: one panel per node would be wasteful, keep every k-th node
        let step = mb.len() / 2048 + 1;
        breaks.extend(mb.into_iter().step_by(step).filter(|&x| x > a && x < b));
    }
    let mut g = 2f64.powi(-8);
    while g < b {
        if g > a {
            breaks.push(g);
        }
        g *= 2.0;
    }
    breaks.push(b);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    breaks
}

fn quad(m: &ConformalMetric, f: impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    if b <= a {
        return (0.0, 0.0);
    }
    let e = adaptive_with_breaks(f, &metric_breaks(m, a, b), Tolerance::rel(QUAD_REL));
    (e.value, e.error)
}

fn coverage(m: &ConformalMetric, r: f64) -> Error {
    Error::Coverage {
        r,
        lo: 0.0,
        hi: m.curvature_reach(),
    }
}

/// ∫_{ℝⁿ} f dx for a radial density built from pointwise curvature.
///
/// The finite part runs to the outermost breakpoint (at least 1); beyond it dyadic panels
/// are summed until they decay geometrically, vanish, or reach the probing cap.
pub fn curvature_integral(
    m: &ConformalMetric,
    f: impl Fn(&PointCurvature) -> f64,
) -> Result<CurvatureIntegral> {
    let n = m.dimension();
    let area = sphere_area(n)?;
    let g = |s: f64| match m.point(s) {
        Ok(p) => area * s.powi(n as i32 - 1) * f(&p),
        Err(_) => f64::NAN,
    };
    let reach = m.curvature_reach();
    let last_break = m
        .breakpoints()
        .into_iter()
        .filter(|b| b.is_finite())
        .fold(1.0, f64::max);
    let r0 = last_break.min(reach);
    let (head, head_err) = quad(m, g, 0.0, r0);
    if head.is_nan() {
        return Err(coverage(m, r0));
    }
    let cap = reach.min(TAIL_CAP);
    if cap <= r0 {
        return Ok(CurvatureIntegral {
            value: head,
            error: head_err,
            flag: Flag::Holds,
            upper: r0,
        });
    }
    let tail = improper_scaled(g, r0, cap, TAIL_REL, head.abs());
    if tail.value.is_nan() {
        return Err(coverage(m, cap));
    }
    let flag = match tail.status {
        Convergence::Converged if tail.value.is_finite() => Flag::Holds,
        _ => Flag::DivergesNumerically,
    };
    Ok(CurvatureIntegral {
        value: head + tail.value,
        error: head_err + tail.error,
        flag,
        upper: if reach.is_finite() { reach } else { f64::INFINITY },
    })
}

/// (1/c_n)∫Q dv, flagged as diverging when ∫|Q| dv does.
pub fn total_q(m: &ConformalMetric) -> Result<CurvatureIntegral> {
    let abs = curvature_integral(m, |p| p.q_density.abs())?;
    total_q_given_abs(m, &abs)
}

fn total_q_given_abs(m: &ConformalMetric, abs: &CurvatureIntegral) -> Result<CurvatureIntegral> {
    let cn = c_n(m.dimension())?;
    let mut t = curvature_integral(m, |p| p.q_density)?.scaled(1.0 / cn);
    if !abs.converged() {
        t.flag = Flag::DivergesNumerically;
    }
    Ok(t)
}

/// Areas, volumes and isoperimetric ratios at a set of radii.
#[derive(Clone, Debug, Serialize)]
pub struct GeometrySeries {
    pub n: usize,
    pub label: String,
    pub radii: Vec<f64>,
    pub area: Vec<f64>,
    pub volume: Vec<f64>,
    pub iso_ratio: Vec<f64>,
}

impl GeometrySeries {
    /// CSV with columns `r,area,volume,iso_ratio`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,area,volume,iso_ratio\n");
        for i in 0..self.radii.len() {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fmt_f64(self.radii[i]),
                fmt_f64(self.area[i]),
                fmt_f64(self.volume[i]),
                fmt_f64(self.iso_ratio[i])
            );
        }
        out
    }
}

/// Normalized isoperimetric ratio of a ball with the given boundary area and volume.
pub fn iso_ratio(n: usize, area: f64, volume: f64) -> Result<f64> {
    let nf = n as f64;
    let a = sphere_area(n)?;
    // in logs: Area^{n/(n−1)} alone overflows long before the ratio does
    let log_i = nf / (nf - 1.0) * area.ln() - nf.ln() - a.ln() / (nf - 1.0) - volume.ln();
    Ok(log_i.exp())
}

/// Area(∂B_r) = nω_n r^{n−1} e^{(n−1)u(r)}, Vol(B_r) = nω_n ∫₀^r s^{n−1} e^{nu(s)} ds and I(r).
pub fn geometry_series(m: &ConformalMetric, radii: &[f64]) -> Result<GeometrySeries> {
    let n = m.dimension();
    let nf = n as f64;
    let area_unit = sphere_area(n)?;
    if radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::Domain("geometry radii must be positive".into()));
    }
    let mut order: Vec<usize> = (0..radii.len()).collect();
    order.sort_by(|&i, &j| radii[i].total_cmp(&radii[j]));
    let dens = |s: f64| match m.u(s) {
        Ok(u) => area_unit * s.powi(n as i32 - 1) * (nf * u).exp(),
        Err(_) => f64::NAN,
    };
    let mut volume = vec![0.0; radii.len()];
    let mut parts = Vec::with_capacity(radii.len());
    let mut prev = 0.0;
    for &i in &order {
        let r = radii[i];
        parts.push(quad(m, dens, prev, r).0);
        volume[i] = pairwise_sum(&parts);
        prev = r;
    }
    let mut area = Vec::with_capacity(radii.len());
    let mut iso = Vec::with_capacity(radii.len());
    for (i, &r) in radii.iter().enumerate() {
        let u = m.u(r)?;
        let a = area_unit * r.powi(n as i32 - 1) * ((nf - 1.0) * u).exp();
        if a.is_nan() || volume[i].is_nan() {
            return Err(coverage(m, r));
        }
        area.push(a);
        iso.push(iso_ratio(n, a, volume[i])?);
    }
    Ok(GeometrySeries {
        n,
        label: m.label().to_string(),
        radii: radii.to_vec(),
        area,
        volume,
        iso_ratio: iso,
    })
}

/// Integrals entering the curvature hypotheses, with convergence flags.
#[derive(Clone, Debug, Serialize)]
pub struct HypothesisReport {
    pub n: usize,
    pub label: String,
    /// ∫|Q| dv
    pub total_abs_q: CurvatureIntegral,
    /// ∫(R⁻)^{n/2} dv
    #[serde(rename = "total_Rminus_pow")]
    pub total_rminus_pow: CurvatureIntegral,
    /// ∫|R|² dv (n = 4)
    #[serde(rename = "total_R_sq")]
    pub total_r_sq: Option<CurvatureIntegral>,
    /// (1/(2π²))∫σ₂(A) dv (n = 4); flagged `fails` unless below 1
    pub sigma2_over: Option<CurvatureIntegral>,
    /// ∫^∞ e^{u(r)} dr = ∞
    pub complete: bool,
    pub completeness: Flag,
}

impl HypothesisReport {
    /// Finite ∫|Q|, finite ∫(R⁻)^{n/2} and completeness.
    pub fn holds(&self) -> bool {
        self.total_abs_q.flag == Flag::Holds
            && self.total_rminus_pow.flag == Flag::Holds
            && self.complete
    }

    pub fn to_json(&self) -> Result<serde_json::Value> {
        let mut v = serde_json::to_value(self).map_err(|e| Error::Parse(e.to_string()))?;
        v["holds"] = self.holds().into();
        v["conventions"] = serde_json::to_value(Conventions::for_dimension(self.n)?)
            .map_err(|e| Error::Parse(e.to_string()))?;
        Ok(v)
    }
}

/// Radial completeness: the metric length of a ray, ∫₀^∞ e^{u(r)} dr, is infinite.
///
/// A declared log tail `β log r + c` decides in closed form (diverges iff β ≥ −1).
pub fn completeness(m: &ConformalMetric) -> Result<Flag> {
    if let Some(t) = m.log_tail() {
        return Ok(if t.beta >= -1.0 {
            Flag::DivergesNumerically
        } else {
            Flag::Holds
        });
    }
    let reach = m.curvature_reach();
    let f = |s: f64| m.u(s).map(f64::exp).unwrap_or(f64::NAN);
    let e = improper(f, 0.0, reach.min(TAIL_CAP), TAIL_REL);
    if e.value.is_nan() {
        return Err(coverage(m, reach));
    }
    Ok(match e.status {
        Convergence::Converged if e.value.is_finite() => Flag::Holds,
        _ => Flag::DivergesNumerically,
    })
}

pub fn hypothesis_report(m: &ConformalMetric) -> Result<HypothesisReport> {
    let n = m.dimension();
    let total_abs_q = curvature_integral(m, |p| p.q_density.abs())?;
    let total_rminus_pow = curvature_integral(m, |p| p.r_minus_pow_density(n))?;
    let (mut total_r_sq, mut sigma2_over) = (None, None);
    if n == 4 {
        // R² e^{4u} = S²
        total_r_sq = Some(curvature_integral(m, |p| p.s * p.s)?);
        let pi2 = std::f64::consts::PI.powi(2);
        let mut s2 = curvature_integral(m, |p| p.sigma2_density.unwrap_or(f64::NAN))?
            .scaled(1.0 / (2.0 * pi2));
        if s2.flag == Flag::Holds && !(s2.value < 1.0) {
            s2.flag = Flag::Fails;
        }
        sigma2_over = Some(s2);
    }
    let completeness = completeness(m)?;
    Ok(HypothesisReport {
        n,
        label: m.label().to_string(),
        total_abs_q,
        total_rminus_pow,
        total_r_sq,
        sigma2_over,
        // an infinite ray length is what completeness asks for
        complete: completeness == Flag::DivergesNumerically,
        completeness,
    })
}

/// Limit of `I` from three samples at ratio-2 radii, assuming `I(r) = L + c r^{−ε}`.
///
/// Falls back to the outermost sample when the differences do not contract.
pub fn richardson_limit(samples: &[(f64, f64); 3]) -> f64 {
    let [(_, i0), (_, i1), (_, i2)] = *samples;
    let (d1, d2) = (i1 - i0, i2 - i1);
    if d1 == 0.0 || d2 == 0.0 {
        return i2;
    }
    let q = d2 / d1;
    if !(q > 0.0 && q < 1.0) {
        return i2;
    }
    i2 + d2 * q / (1.0 - q)
}

/// Both sides of the deficit identity `χ − (1/c_n)∫Q dv = lim I(r)`.
#[derive(Clone, Debug, Serialize)]
pub struct DeficitReport {
    pub n: usize,
    pub label: String,
    pub chi: f64,
    pub total_q_over_cn: f64,
    pub iso_limit: f64,
    pub deficit_residual: f64,
    /// "hypotheses hold" or "hypotheses violated"
    pub status: String,
    pub r_max: f64,
    /// (r, I(r)) at r_max/4, r_max/2, r_max
    pub iso_samples: [(f64, f64); 3],
    pub hypotheses: HypothesisReport,
}

impl DeficitReport {
    pub fn hypotheses_hold(&self) -> bool {
        self.hypotheses.holds()
    }

    pub fn to_json(&self) -> Result<serde_json::Value> {
        let mut v = serde_json::to_value(self).map_err(|e| Error::Parse(e.to_string()))?;
        v["hypotheses"] = self.hypotheses.to_json()?;
        v["conventions"] = serde_json::to_value(Conventions::for_dimension(self.n)?)
            .map_err(|e| Error::Parse(e.to_string()))?;
        Ok(v)
    }
}

pub const HYPOTHESES_HOLD: &str = "hypotheses hold";
pub const HYPOTHESES_VIOLATED: &str = "hypotheses violated";

/// Deficit identity with `I` extrapolated from `r_max/4, r_max/2, r_max`.
pub fn deficit_check(m: &ConformalMetric, r_max: f64) -> Result<DeficitReport> {
    if !(r_max > 0.0) || r_max > m.curvature_reach() {
        return Err(coverage(m, r_max));
    }
    let n = m.dimension();
    let hypotheses = hypothesis_report(m)?;
    let total = total_q_given_abs(m, &hypotheses.total_abs_q)?;
    let radii = [r_max / 4.0, r_max / 2.0, r_max];
    let series = geometry_series(m, &radii)?;
    let iso_samples = [
        (radii[0], series.iso_ratio[0]),
        (radii[1], series.iso_ratio[1]),
        (radii[2], series.iso_ratio[2]),
    ];
    let iso_limit = richardson_limit(&iso_samples);
    let status = if hypotheses.holds() {
        HYPOTHESES_HOLD
    } else {
        HYPOTHESES_VIOLATED
    };
    Ok(DeficitReport {
        n,
        label: m.label().to_string(),
        chi: CHI,
        total_q_over_cn: total.value,
        iso_limit,
        deficit_residual: (CHI - total.value - iso_limit).abs(),
        status: status.to_string(),
        r_max,
        iso_samples,
        hypotheses,
    })
}

/// `F(ρ) = ∫_{B_ρ} Δ_gR dv_g`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FluxPoint {
    pub rho: f64,
    pub flux: f64,
}

/// Boundary flux `F(ρ) = ∫_{∂B_ρ} e^{2u} ∂_rR dσ = 2π²ρ³(S′ − 2u′S)` with `S = R e^{2u}` (n = 4).
pub fn divergence_flux(m: &ConformalMetric, radii: &[f64]) -> Result<Vec<FluxPoint>> {
    if m.dimension() != 4 {
        return Err(Error::UnsupportedDimension {
            op: "divergence_flux",
            n: m.dimension(),
        });
    }
    let area = sphere_area(4)?;
    radii
        .iter()
        .map(|&rho| {
            let p = m.point(rho)?;
            Ok(FluxPoint {
                rho,
                flux: area * rho.powi(3) * (p.ds - 2.0 * p.du * p.s),
            })
        })
        .collect()
}

/// The two routes to the total Q-curvature in ℝ⁴ and the flux that separates them.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct RouteConsistency {
    /// (1/c₄)∫Q dv
    pub q_over_cn: f64,
    /// (1/(2π²))∫σ₂(A) dv
    pub sigma2_over: f64,
    pub difference: f64,
    /// ∫|Q| dv
    pub total_abs_q: f64,
    /// F(ρ_max)
    pub flux: f64,
    /// The comparison is meaningful only when the flux has died out.
    pub applicable: bool,
}

/// Compares `(1/c₄)∫Q dv` with `(1/(2π²))∫σ₂ dv`, flagged applicable when `|F(ρ_max)| < 1e−3`.
pub fn route_consistency(m: &ConformalMetric, rho_max: f64) -> Result<RouteConsistency> {
    let flux = divergence_flux(m, &[rho_max])?[0].flux;
    let h = hypothesis_report(m)?;
    let q = total_q(m)?;
    let s2 = h.sigma2_over.expect("n = 4");
    let applicable = flux.abs() < 1e-3 && q.converged() && s2.converged();
    Ok(RouteConsistency {
        q_over_cn: q.value,
        sigma2_over: s2.value,
        difference: (q.value - s2.value).abs(),
        total_abs_q: h.total_abs_q.value,
        flux,
        applicable,
    })
}

/// Both sides of `∫_A Δu dx ≤ (1/(2(n−1))) (∫_A (R⁻)^{n/2} dv)^{2/n} Vol_g(A)^{(n−2)/n}`
/// on `A = B_{2r}∖B_r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AnnulusBound {
    pub r: f64,
    /// ∫_A Δu dx
    pub lap_u_integral: f64,
    /// ⨍_A Δu dx
    pub lap_u_avg: f64,
    pub bound: f64,
}

impl AnnulusBound {
    /// Left side below the bound up to a relative quadrature slack.
    pub fn holds(&self, rel: f64) -> bool {
        self.lap_u_integral <= self.bound + rel * self.lap_u_integral.abs().max(self.bound.abs())
    }
}

pub fn annulus_scalar_bound(m: &ConformalMetric, radii: &[f64]) -> Result<Vec<AnnulusBound>> {
    let n = m.dimension();
    let nf = n as f64;
    let area = sphere_area(n)?;
    let mut out = Vec::with_capacity(radii.len());
    for &r in radii {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("annulus radius must be positive, got {r}")));
        }
        // divergence theorem: ∫_A Δu = nω_n [s^{n−1}u′(s)]_r^{2r}
        let flux = |s: f64| -> Result<f64> {
            Ok(area * s.powi(n as i32 - 1) * m.point(s)?.du)
        };
        let left = flux(2.0 * r)? - flux(r)?;
        let flat_vol = area / nf * (2f64.powi(n as i32) - 1.0) * r.powi(n as i32);
        let rminus = |s: f64| match m.point(s) {
            Ok(p) => area * s.powi(n as i32 - 1) * p.r_minus_pow_density(n),
            Err(_) => f64::NAN,
        };
        let vol = |s: f64| match m.u(s) {
            Ok(u) => area * s.powi(n as i32 - 1) * (nf * u).exp(),
            Err(_) => f64::NAN,
        };
        let (rm, _) = quad(m, rminus, r, 2.0 * r);
        let (v, _) = quad(m, vol, r, 2.0 * r);
        if rm.is_nan() || v.is_nan() {
            return Err(coverage(m, 2.0 * r));
        }
        let bound = rm.powf(2.0 / nf) * v.powf((nf - 2.0) / nf) / (2.0 * (nf - 1.0));
        out.push(AnnulusBound {
            r,
            lap_u_integral: left,
            lap_u_avg: left / flat_vol,
            bound,
        });
    }
    Ok(out)
}
