//! Pointwise curvature of `g = e^{2u}|dx|²` for a radial conformal factor `u`.
//!
//! Every quantity is first formed as a *density* that carries no exponential of `u`:
//!
//! | density            | equals         |
//! |--------------------|----------------|
//! | `S`                | `R e^{2u}`     |
//! | `q_density`        | `Q e^{nu}`     |
//! | `sigma2_density`   | `σ₂(A) e^{4u}` |
//! | `e2_density`       | `|E|² e^{4u}`  |
//! | `lapg_r_density`   | `Δ_gR e^{4u}`  |
//!
//! so integrals against `dv_g = e^{nu}dx` never overflow, and the pointwise values are
//! recovered by one multiplication. Closed-form factors are differentiated exactly with
//! jets; sampled factors with the fourth-order stencils of [`crate::field`].

use std::fmt;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::Serialize;

use crate::constants::Conventions;
use crate::error::{check_dimension, Error, Result};
use crate::field::{
    radial_derivatives, radial_laplacian, radial_polyharmonic, RadialFunction, RadialProfile,
};
use crate::jet::{Jet, MAX_ORDER};

/// The conformal factor: a sampled profile or a closed-form radial function.
#[derive(Clone)]
pub enum ConformalFactor {
    Sampled(RadialProfile),
    Analytic(Arc<dyn RadialFunction>),
}

/// `(ℝⁿ, e^{2u}|dx|²)` with radial `u`, plus the radii on which reports are tabulated.
#[derive(Clone)]
pub struct ConformalMetric {
    n: usize,
    factor: ConformalFactor,
    nodes: Vec<f64>,
    label: String,
    table: Option<Arc<NodeTable>>,
}

impl fmt::Debug for ConformalMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConformalMetric")
            .field("n", &self.n)
            .field("label", &self.label)
            .field(
                "factor",
                &match self.factor {
                    ConformalFactor::Sampled(_) => "sampled",
                    ConformalFactor::Analytic(_) => "analytic",
                },
            )
            .field("nodes", &self.nodes.len())
            .finish()
    }
}

/// Curvature densities at one radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PointCurvature {
    pub r: f64,
    pub u: f64,
    /// u′
    pub du: f64,
    /// Δu
    pub lap_u: f64,
    /// R e^{2u}
    pub s: f64,
    /// d/dr (R e^{2u})
    pub ds: f64,
    /// Rounding level of `s`: a few ulps of the terms it is assembled from.
    pub s_floor: f64,
    /// Q e^{nu} = (−Δ)^{n/2}u / 2
    pub q_density: f64,
    pub sigma2_density: Option<f64>,
    pub e2_density: Option<f64>,
    pub lapg_r_density: Option<f64>,
}

impl PointCurvature {
    pub fn scalar(&self) -> f64 {
        self.s * (-2.0 * self.u).exp()
    }

    pub fn q(&self, n: usize) -> f64 {
        self.q_density * (-(n as f64) * self.u).exp()
    }

    pub fn sigma2(&self) -> Option<f64> {
        self.sigma2_density.map(|d| d * (-4.0 * self.u).exp())
    }

    pub fn e2(&self) -> Option<f64> {
        self.e2_density.map(|d| d * (-4.0 * self.u).exp())
    }

    pub fn lapg_r(&self) -> Option<f64> {
        self.lapg_r_density.map(|d| d * (-4.0 * self.u).exp())
    }

    /// (R⁻)^{n/2} e^{nu}, the integrand of the negative-part hypothesis.
    ///
    /// Negative values of `s` within its rounding level count as zero.
    pub fn r_minus_pow_density(&self, n: usize) -> f64 {
        (-self.s - self.s_floor).max(0.0).powi(n as i32 / 2)
    }
}

/// Curvature densities tabulated on node radii (sampled factors only).
struct NodeTable {
    points: Vec<PointCurvature>,
}

impl ConformalMetric {
    pub fn analytic(
        n: usize,
        u: Arc<dyn RadialFunction>,
        nodes: Vec<f64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        check_dimension(n)?;
        // reuse profile validation for the node set
        RadialProfile::new(nodes.clone(), vec![0.0; nodes.len()])?;
        Ok(ConformalMetric {
            n,
            factor: ConformalFactor::Analytic(u),
            nodes,
            label: label.into(),
            table: None,
        })
    }

    /// Metric from samples of `u`; curvature is tabulated eagerly by finite differences.
    pub fn sampled(n: usize, u: RadialProfile, label: impl Into<String>) -> Result<Self> {
        check_dimension(n)?;
        let table = node_table(n, &u)?;
        Ok(ConformalMetric {
            n,
            nodes: u.nodes().to_vec(),
            factor: ConformalFactor::Sampled(u),
            label: label.into(),
            table: Some(Arc::new(table)),
        })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn factor(&self) -> &ConformalFactor {
        &self.factor
    }

    /// Same analytic metric tabulated on other radii.
    pub fn with_nodes(&self, nodes: Vec<f64>) -> Result<Self> {
        match &self.factor {
            ConformalFactor::Analytic(u) => {
                ConformalMetric::analytic(self.n, u.clone(), nodes, self.label.clone())
            }
            ConformalFactor::Sampled(_) => Err(Error::Invalid(
                "a sampled metric is tied to its own nodes".into(),
            )),
        }
    }

    /// u as a radial function (the sampled profile or the closed form).
    pub fn u_function(&self) -> Arc<dyn RadialFunction> {
        match &self.factor {
            ConformalFactor::Analytic(u) => u.clone(),
            ConformalFactor::Sampled(p) => Arc::new(p.clone()),
        }
    }

    pub fn u(&self, r: f64) -> Result<f64> {
        match &self.factor {
            ConformalFactor::Analytic(u) => Ok(u.value(r)),
            ConformalFactor::Sampled(p) => p.eval(r),
        }
    }

    pub fn log_tail(&self) -> Option<crate::field::LogTail> {
        match &self.factor {
            ConformalFactor::Analytic(u) => u.log_tail(),
            ConformalFactor::Sampled(p) => p.tail(),
        }
    }

    /// Largest radius where curvature is available.
    pub fn curvature_reach(&self) -> f64 {
        match (&self.factor, &self.table) {
            (ConformalFactor::Sampled(p), Some(t)) => {
                if p.tail().is_some() {
                    f64::INFINITY
                } else {
                    t.points.last().map_or(0.0, |p| p.r)
                }
            }
            (ConformalFactor::Analytic(u), _) => u.domain().1,
            _ => 0.0,
        }
    }

    /// Radii where curvature densities are non-smooth (quadrature breakpoints).
    pub fn breakpoints(&self) -> Vec<f64> {
        match (&self.factor, &self.table) {
            (ConformalFactor::Sampled(_), Some(t)) => t.points.iter().map(|p| p.r).collect(),
            (ConformalFactor::Analytic(u), _) => u.breakpoints(),
            _ => Vec::new(),
        }
    }

    /// Curvature densities at an arbitrary radius.
    ///
    /// Closed-form factors are evaluated exactly; sampled factors interpolate their node
    /// table linearly and fall back to the log tail beyond it.
    pub fn point(&self, r: f64) -> Result<PointCurvature> {
        match (&self.factor, &self.table) {
            (ConformalFactor::Analytic(u), _) => {
                let (lo, hi) = u.domain();
                if r < lo || r > hi {
                    return Err(Error::Coverage { r, lo, hi });
                }
                Ok(point_from_jet(self.n, r, |order| u.jet(r, order)))
            }
            (ConformalFactor::Sampled(p), Some(t)) => {
                let pts = &t.points;
                let (lo, hi) = (pts[0].r, pts[pts.len() - 1].r);
                if r >= lo && r <= hi {
                    return Ok(interpolate_point(pts, r));
                }
                match p.tail() {
                    Some(tail) if r > tail.r_max => {
                        Ok(point_from_jet(self.n, r, |order| tail.jet(r, order)))
                    }
                    _ => Err(Error::Coverage { r, lo, hi }),
                }
            }
            (ConformalFactor::Sampled(_), None) => unreachable!("sampled metrics carry a table"),
        }
    }

    /// Densities on the report nodes (trimmed for sampled factors).
    fn points(&self) -> Result<Vec<PointCurvature>> {
        match &self.table {
            Some(t) => Ok(t.points.clone()),
            None => self.nodes.iter().map(|&r| self.point(r)).collect(),
        }
    }
}

fn jet_order(n: usize) -> usize {
    (n + 1).clamp(5, MAX_ORDER)
}

fn lap_jet(n: usize, g: &Jet) -> Jet {
    let d = g.deriv();
    d.deriv() + d.div_var().scale((n - 1) as f64)
}

/// Assembles the curvature densities from unscaled radial derivative data.
#[allow(clippy::too_many_arguments)]
fn assemble(
    n: usize,
    r: f64,
    u: f64,
    du: f64,
    ddu: f64,
    du_over_r: f64,
    lap_u: f64,
    s: f64,
    ds: f64,
    lap_s: f64,
    q_density: f64,
) -> PointCurvature {
    let nf = n as f64;
    let (sigma2_density, e2_density, lapg_r_density) = if n == 4 {
        let common = lap_u + (nf - 2.0) * du * du;
        let ric_r = -(nf - 2.0) * (ddu - du * du) - common;
        let ric_t = -(nf - 2.0) * du_over_r - common;
        let a_r = (ric_r - s / (2.0 * (nf - 1.0))) / (nf - 2.0);
        let a_t = (ric_t - s / (2.0 * (nf - 1.0))) / (nf - 2.0);
        let tr = a_r + (nf - 1.0) * a_t;
        let norm = a_r * a_r + (nf - 1.0) * a_t * a_t;
        let sigma2 = 0.5 * (tr * tr - norm);
        let e_r = ric_r - s / nf;
        let e_t = ric_t - s / nf;
        let e2 = e_r * e_r + (nf - 1.0) * e_t * e_t;
        // e^{4u} Δ_g R written through S = R e^{2u}
        let lapg = lap_s - 4.0 * du * ds + s * (4.0 * du * du - 2.0 * lap_u)
            + (nf - 2.0) * du * (ds - 2.0 * du * s);
        (Some(sigma2), Some(e2), Some(lapg))
    } else {
        (None, None, None)
    };
    let nm1 = nf - 1.0;
    let s_floor = 32.0
        * f64::EPSILON
        * (2.0 * nm1 * (ddu.abs() + nm1 * du_over_r.abs()) + nm1 * (nf - 2.0) * du * du);
    PointCurvature {
        r,
        u,
        du,
        lap_u,
        s,
        ds,
        s_floor,
        q_density,
        sigma2_density,
        e2_density,
        lapg_r_density,
    }
}

fn point_from_jet(n: usize, r: f64, jet: impl Fn(usize) -> Jet) -> PointCurvature {
    let order = jet_order(n);
    let u = jet(order);
    let du = u.deriv();
    let lap_u = lap_jet(n, &u);
    let nm1 = (n - 1) as f64;
    let s = lap_u.scale(-2.0 * nm1) - (du * du).scale(nm1 * (n - 2) as f64);
    let mut poly = u;
    for _ in 0..n / 2 {
        poly = lap_jet(n, &poly);
    }
    let sign = if (n / 2) % 2 == 0 { 1.0 } else { -1.0 };
    let q_density = 0.5 * sign * poly.value();
    let (ds, lap_s) = if n == 4 {
        (s.deriv().value(), lap_jet(n, &s).value())
    } else {
        (s.deriv().value(), f64::NAN)
    };
    assemble(
        n,
        r,
        u.value(),
        du.value(),
        du.deriv().value(),
        du.div_var().value(),
        lap_u.value(),
        s.value(),
        ds,
        lap_s,
        q_density,
    )
}

fn interpolate_point(pts: &[PointCurvature], r: f64) -> PointCurvature {
    let i = match pts.partition_point(|p| p.r <= r) {
        0 => 0,
        k if k >= pts.len() => pts.len() - 2,
        k => k - 1,
    };
    let (a, b) = (&pts[i], &pts[i + 1]);
    let t = (r - a.r) / (b.r - a.r);
    let mix = |x: f64, y: f64| x + t * (y - x);
    let mix_opt = |x: Option<f64>, y: Option<f64>| x.zip(y).map(|(x, y)| mix(x, y));
    PointCurvature {
        r,
        u: mix(a.u, b.u),
        du: mix(a.du, b.du),
        lap_u: mix(a.lap_u, b.lap_u),
        s: mix(a.s, b.s),
        ds: mix(a.ds, b.ds),
        s_floor: mix(a.s_floor, b.s_floor),
        q_density: mix(a.q_density, b.q_density),
        sigma2_density: mix_opt(a.sigma2_density, b.sigma2_density),
        e2_density: mix_opt(a.e2_density, b.e2_density),
        lapg_r_density: mix_opt(a.lapg_r_density, b.lapg_r_density),
    }
}

/// Finite-difference curvature table of a sampled factor, on the node set that survives
/// the polyharmonic trimming.
fn node_table(n: usize, u: &RadialProfile) -> Result<NodeTable> {
    let k = n / 2;
    let nodes = u.nodes();
    let (du, ddu) = radial_derivatives(u)?;
    let lap_u = radial_laplacian(u, n)?;
    let nm1 = (n - 1) as f64;
    let s_vals: Vec<f64> = lap_u
        .values()
        .iter()
        .zip(&du)
        .map(|(l, d)| -2.0 * nm1 * l - nm1 * (n - 2) as f64 * d * d)
        .collect();
    let s = u.with_values(s_vals)?;
    let (ds, _) = radial_derivatives(&s)?;
    let lap_s = if n == 4 {
        radial_laplacian(&s, n)?.values().to_vec()
    } else {
        vec![f64::NAN; nodes.len()]
    };
    let poly = radial_polyharmonic(u, n, k)?;
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    let front = poly.trimmed_front;
    let points = poly
        .profile
        .values()
        .iter()
        .enumerate()
        .map(|(j, lk)| {
            let i = j + front;
            let r = nodes[i];
            let du_over_r = if r == 0.0 { ddu[i] } else { du[i] / r };
            assemble(
                n,
                r,
                u.values()[i],
                du[i],
                ddu[i],
                du_over_r,
                lap_u.values()[i],
                s.values()[i],
                ds[i],
                lap_s[i],
                0.5 * sign * lk,
            )
        })
        .collect();
    Ok(NodeTable { points })
}

fn require_four(m: &ConformalMetric, op: &'static str) -> Result<()> {
    if m.n != 4 {
        Err(Error::UnsupportedDimension { op, n: m.n })
    } else {
        Ok(())
    }
}

fn column(m: &ConformalMetric, f: impl Fn(&PointCurvature) -> f64) -> Result<RadialProfile> {
    let pts = m.points()?;
    RadialProfile::new(pts.iter().map(|p| p.r).collect(), pts.iter().map(f).collect())
}

/// R_g = −2(n−1)e^{−2u}(Δu + (n−2)/2·|∇u|²).
pub fn scalar_curvature(m: &ConformalMetric) -> Result<RadialProfile> {
    column(m, |p| p.scalar())
}

/// Q_g = (−Δ)^{n/2}u · e^{−nu} / 2.
pub fn q_curvature(m: &ConformalMetric) -> Result<RadialProfile> {
    let n = m.n;
    column(m, |p| p.q(n))
}

/// σ₂ of the Schouten tensor (n = 4).
pub fn sigma2_schouten(m: &ConformalMetric) -> Result<RadialProfile> {
    require_four(m, "sigma2_schouten")?;
    column(m, |p| p.sigma2().expect("n = 4"))
}

/// |E_g|², the squared norm of the traceless Ricci tensor (n = 4).
pub fn traceless_ricci_norm_sq(m: &ConformalMetric) -> Result<RadialProfile> {
    require_four(m, "traceless_ricci_norm_sq")?;
    column(m, |p| p.e2().expect("n = 4"))
}

/// Δ_g f = e^{−2u}(Δf + (n−2)⟨∇u, ∇f⟩) for a radial f sampled on the metric's nodes.
pub fn conformal_laplacian_on_function(
    m: &ConformalMetric,
    f: &RadialProfile,
) -> Result<RadialProfile> {
    if f.nodes() != m.nodes() {
        return Err(Error::NodeMismatch(format!(
            "function has {} nodes, metric has {}",
            f.len(),
            m.nodes().len()
        )));
    }
    let (df, _) = radial_derivatives(f)?;
    let lap_f = radial_laplacian(f, m.n)?;
    let (u, du): (Vec<f64>, Vec<f64>) = match &m.factor {
        ConformalFactor::Sampled(p) => (p.values().to_vec(), radial_derivatives(p)?.0),
        ConformalFactor::Analytic(g) => m
            .nodes
            .iter()
            .map(|&r| {
                let j = g.jet(r, 1);
                (j.value(), j.derivative(1))
            })
            .unzip(),
    };
    let nf = m.n as f64;
    let values = (0..f.len())
        .map(|i| (-2.0 * u[i]).exp() * (lap_f.values()[i] + (nf - 2.0) * du[i] * df[i]))
        .collect();
    f.with_values(values)
}

/// Tabulated curvature of a metric together with its identity residuals.
#[derive(Clone, Debug, Serialize)]
pub struct CurvatureReport {
    pub n: usize,
    pub label: String,
    pub nodes: Vec<f64>,
    #[serde(rename = "R")]
    pub scalar: Vec<f64>,
    #[serde(rename = "R_minus")]
    pub scalar_minus: Vec<f64>,
    #[serde(rename = "Q")]
    pub q: Vec<f64>,
    pub sigma2: Option<Vec<f64>>,
    #[serde(rename = "E2")]
    pub e_norm_sq: Option<Vec<f64>>,
    #[serde(rename = "lapgR")]
    pub lapg_r: Option<Vec<f64>>,
    /// Per-node max of the two relative identity residuals (n = 4).
    pub residual: Option<Vec<f64>>,
    #[serde(skip)]
    pub points: Vec<PointCurvature>,
    /// max over nodes of |Q − (−Δ_gR/12 + 2σ₂)| / scale.
    pub decomposition_residual: Option<f64>,
    /// max over nodes of |Q − (−Δ_gR + R²/4 − 3|E|²)/12| / scale.
    pub branson_residual: Option<f64>,
    pub tolerance: f64,
}

/// Default relative tolerance for the curvature identities.
pub const REPORT_TOLERANCE: f64 = 1e-6;

impl CurvatureReport {
    pub fn identities_hold(&self) -> bool {
        [self.decomposition_residual, self.branson_residual]
            .iter()
            .flatten()
            .all(|r| *r <= self.tolerance)
    }

    /// Errors if either identity residual exceeds the report tolerance.
    pub fn assert_identities(&self) -> Result<()> {
        for (which, res) in [
            ("decomposition", self.decomposition_residual),
            ("branson", self.branson_residual),
        ] {
            if let Some(res) = res {
                if !(res <= self.tolerance) {
                    return Err(Error::Identity {
                        which,
                        residual: res,
                        tol: self.tolerance,
                    });
                }
            }
        }
        Ok(())
    }

    /// CSV with columns `r,R,R_minus,Q,sigma2,E2,lapgR,residual` (NaN where undefined).
    pub fn to_csv(&self) -> String {
        use crate::field::fmt_f64 as f;
        let mut out = String::from("r,R,R_minus,Q,sigma2,E2,lapgR,residual\n");
        let opt = |c: &Option<Vec<f64>>, i: usize| c.as_ref().map_or(f64::NAN, |v| v[i]);
        for i in 0..self.nodes.len() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                f(self.nodes[i]),
                f(self.scalar[i]),
                f(self.scalar_minus[i]),
                f(self.q[i]),
                f(opt(&self.sigma2, i)),
                f(opt(&self.e_norm_sq, i)),
                f(opt(&self.lapg_r, i)),
                f(opt(&self.residual, i)),
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<serde_json::Value> {
        let mut v = serde_json::to_value(self).map_err(|e| Error::Parse(e.to_string()))?;
        v["conventions"] = serde_json::to_value(Conventions::for_dimension(self.n)?)
            .map_err(|e| Error::Parse(e.to_string()))?;
        v["identities_hold"] = self.identities_hold().into();
        Ok(v)
    }
}

/// Tabulates R, R⁻, Q and (n = 4) σ₂, |E|², Δ_gR, and measures both Q identities.
///
/// Residuals are relative to the largest of the compared terms at each node, floored at
/// `1e−6` of the largest such term over all nodes.
pub fn curvature_report(m: &ConformalMetric, tolerance: f64) -> Result<CurvatureReport> {
    if m.n != 2 && m.n != 4 {
        return Err(Error::UnsupportedDimension {
            op: "curvature_report",
            n: m.n,
        });
    }
    let points = m.points()?;
    let n = m.n;
    let nodes: Vec<f64> = points.iter().map(|p| p.r).collect();
    let scalar: Vec<f64> = points.iter().map(|p| p.scalar()).collect();
    let scalar_minus = scalar.iter().map(|r| (-r).max(0.0)).collect();
    let q = points.iter().map(|p| p.q(n)).collect();
    let (mut sigma2, mut e_norm_sq, mut lapg_r) = (None, None, None);
    let (mut decomposition_residual, mut branson_residual) = (None, None);
    let mut residual = None;
    if n == 4 {
        sigma2 = Some(points.iter().map(|p| p.sigma2().unwrap()).collect());
        e_norm_sq = Some(points.iter().map(|p| p.e2().unwrap()).collect());
        lapg_r = Some(points.iter().map(|p| p.lapg_r().unwrap()).collect());
        // identities compared at the density level (common factor e^{-4u})
        let terms: Vec<[f64; 5]> = points
            .iter()
            .map(|p| {
                let lap = p.lapg_r_density.unwrap();
                [
                    p.q_density,
                    lap / 12.0,
                    2.0 * p.sigma2_density.unwrap(),
                    p.s * p.s / 48.0,
                    p.e2_density.unwrap() / 4.0,
                ]
            })
            .collect();
        let global = terms
            .iter()
            .flat_map(|t| t.iter().map(|x| x.abs()))
            .fold(0.0, f64::max);
        let floor = (1e-6 * global).max(f64::MIN_POSITIVE);
        let mut dec: f64 = 0.0;
        let mut bra: f64 = 0.0;
        let mut per_node = Vec::with_capacity(terms.len());
        for t in &terms {
            let scale = t.iter().map(|x| x.abs()).fold(floor, f64::max);
            let d = (t[0] - (-t[1] + t[2])).abs() / scale;
            let b = (t[0] - (-t[1] + t[3] - t[4])).abs() / scale;
            dec = dec.max(d);
            bra = bra.max(b);
            per_node.push(d.max(b));
        }
        residual = Some(per_node);
        decomposition_residual = Some(dec);
        branson_residual = Some(bra);
    }
    Ok(CurvatureReport {
        n,
        label: m.label.clone(),
        nodes,
        scalar,
        scalar_minus,
        q,
        sigma2,
        e_norm_sq,
        lapg_r,
        residual,
        points,
        decomposition_residual,
        branson_residual,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{JetFn, NodeLayout};

    fn sphere_u() -> Arc<dyn RadialFunction> {
        Arc::new(JetFn::new(|r| (*r * *r).add_scalar(1.0).ln().scale(-1.0).add_scalar(2f64.ln())))
    }

    fn flat() -> Arc<dyn RadialFunction> {
        Arc::new(JetFn::new(|r| r.scale(0.0)))
    }

    #[test]
    fn flat_metric_is_curvature_free() {
        let m = ConformalMetric::analytic(4, flat(), NodeLayout::uniform(0.0, 5.0, 11), "flat")
            .unwrap();
        let rep = curvature_report(&m, REPORT_TOLERANCE).unwrap();
        for col in [&rep.scalar, &rep.q, rep.sigma2.as_ref().unwrap(), rep.lapg_r.as_ref().unwrap()]
        {
            assert!(col.iter().all(|v| *v == 0.0));
        }
        assert!(rep.identities_hold());
    }

    #[test]
    fn round_sphere_values() {
        let m =
            ConformalMetric::analytic(4, sphere_u(), NodeLayout::uniform(0.0, 20.0, 81), "sphere")
                .unwrap();
        let rep = curvature_report(&m, REPORT_TOLERANCE).unwrap();
        for i in 0..rep.nodes.len() {
            assert!((rep.scalar[i] - 12.0).abs() < 1e-9, "R at {}", rep.nodes[i]);
            assert!((rep.q[i] - 3.0).abs() < 1e-8, "Q at {}: {}", rep.nodes[i], rep.q[i]);
            assert!((rep.sigma2.as_ref().unwrap()[i] - 1.5).abs() < 1e-8);
            assert!(rep.e_norm_sq.as_ref().unwrap()[i].abs() < 1e-8);
            assert!(rep.lapg_r.as_ref().unwrap()[i].abs() < 1e-7);
        }
        rep.assert_identities().unwrap();
    }

    #[test]
    fn two_sphere_q_is_half() {
        let m =
            ConformalMetric::analytic(2, sphere_u(), NodeLayout::uniform(0.0, 5.0, 11), "s2").unwrap();
        let q = q_curvature(&m).unwrap();
        assert!(q.values().iter().all(|v| (v - 0.5).abs() < 1e-12));
        let r = scalar_curvature(&m).unwrap();
        assert!(r.values().iter().all(|v| (v - 2.0).abs() < 1e-12));
        assert!(matches!(
            sigma2_schouten(&m),
            Err(Error::UnsupportedDimension { n: 2, .. })
        ));
    }

    #[test]
    fn pure_cone_scalar_curvature() {
        let alpha = 0.5;
        let u: Arc<dyn RadialFunction> = Arc::new(JetFn::new(move |r| r.ln().scale(-alpha)));
        let m = ConformalMetric::analytic(4, u, vec![2.0, 10.0, 100.0], "cone").unwrap();
        let r = scalar_curvature(&m).unwrap();
        for (x, v) in r.nodes().iter().zip(r.values()) {
            let exact = 12.0 * alpha * (1.0 - alpha / 2.0) * x.powf(2.0 * alpha - 2.0);
            assert!((v - exact).abs() < 1e-12 * exact.abs().max(1.0));
        }
        // the cone has σ₂ = 0 and Q = 0 away from its tip
        let s2 = sigma2_schouten(&m).unwrap();
        assert!(s2.values().iter().all(|v| v.abs() < 1e-12));
        let q = q_curvature(&m).unwrap();
        assert!(q.values().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn conformal_laplacian_examples() {
        let nodes = NodeLayout::uniform(0.0, 3.0, 61);
        let m = ConformalMetric::analytic(4, flat(), nodes.clone(), "flat").unwrap();
        let f = RadialProfile::from_fn(nodes.clone(), |r| r * r).unwrap();
        let out = conformal_laplacian_on_function(&m, &f).unwrap();
        assert!(out.values().iter().all(|v| (v - 8.0).abs() < 1e-9));

        let s = ConformalMetric::analytic(4, sphere_u(), nodes.clone(), "sphere").unwrap();
        let c = RadialProfile::from_fn(nodes, |_| 12.0).unwrap();
        let out = conformal_laplacian_on_function(&s, &c).unwrap();
        assert!(out.values().iter().all(|v| v.abs() < 1e-9));

        let other = RadialProfile::from_fn(NodeLayout::uniform(0.0, 3.0, 31), |_| 1.0).unwrap();
        assert!(matches!(
            conformal_laplacian_on_function(&s, &other),
            Err(Error::NodeMismatch(_))
        ));
    }

    #[test]
    fn sampled_sphere_matches_closed_form() {
        // e^{-4u} grows like r⁸, so the finite-difference Q is only checked near the origin
        let nodes = NodeLayout::uniform(0.0, 10.0, 1001);
        let u = RadialProfile::from_fn(nodes, |r| (2.0 / (1.0 + r * r)).ln()).unwrap();
        let m = ConformalMetric::sampled(4, u, "sphere-sampled").unwrap();
        let rep = curvature_report(&m, 1e-4).unwrap();
        for i in 0..rep.nodes.len() {
            if rep.nodes[i] > 1.5 {
                break;
            }
            assert!((rep.q[i] - 3.0).abs() < 3e-4, "Q at {}: {}", rep.nodes[i], rep.q[i]);
            assert!((rep.scalar[i] - 12.0).abs() < 1e-6);
        }
        rep.assert_identities().unwrap();
    }

    #[test]
    fn additive_constant_rescales_curvature() {
        let c = 0.7;
        let shifted: Arc<dyn RadialFunction> = Arc::new(JetFn::new(move |r| {
            (*r * *r).add_scalar(1.0).ln().scale(-1.0).add_scalar(2f64.ln() + c)
        }));
        let nodes = NodeLayout::uniform(0.0, 4.0, 17);
        let a = ConformalMetric::analytic(4, sphere_u(), nodes.clone(), "a").unwrap();
        let b = ConformalMetric::analytic(4, shifted, nodes, "b").unwrap();
        let (ra, rb) = (scalar_curvature(&a).unwrap(), scalar_curvature(&b).unwrap());
        let (qa, qb) = (q_curvature(&a).unwrap(), q_curvature(&b).unwrap());
        for i in 0..ra.len() {
            assert!((rb.values()[i] - ra.values()[i] * (-2.0 * c).exp()).abs() < 1e-10);
            assert!((qb.values()[i] - qa.values()[i] * (-4.0 * c).exp()).abs() < 1e-10);
        }
    }
}
