//! Logarithmic potentials of radial Q-densities and the diagnostics built on them.
//!
//! For a radial density the potential reduces to one dimension through the sphere mean of
//! the kernel. With `t = min(r, s)/max(r, s)` and n = 2k,
//!
//! ```text
//! ⨍_{|y|=s} log|x − y| dσ = log max(r, s) + Σ_{j=1}^{k−1} a_j t^{2j},   a_j = −E[T_{2j}(cos θ)]/(2j),
//! ```
//!
//! where `T_m` are Chebyshev polynomials and `E` is the mean over `S^{n−1}` (so a₁ = 1/4 in
//! ℝ⁴, and the sum is empty in the plane). Writing `A = nω_n`,
//!
//! ```text
//! v(r) = −(1/c_n) [log r·M − L + Σ_j a_j (r^{−2j} N_j + r^{2j} H_j)],
//! M = ∫₀^r A s^{n−1}P,  L = ∫₀^r A s^{n−1}P log s,
//! N_j = ∫₀^r A s^{n−1+2j}P,  H_j = ∫_r^∞ A s^{n−1−2j}P.
//! ```
//!
//! The split removes the weak singularity at `s = r` from the quadrature. All moments are
//! tabulated once on a panel grid (forward from 0, `H_j` backward from ∞) and completed by
//! a single adaptive integral at evaluation time.

mod normality;
pub mod oracle;
mod pizzetti;

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::constants::{c_n, sphere_area};
use crate::curvature::ConformalMetric;
use crate::error::{check_dimension, Error, Result};
use crate::field::{annulus_mean, JetFn, LogTail, RadialFunction};
use crate::jet::Jet;
use crate::quadrature::{adaptive_with_breaks, pairwise_sum, Tolerance};

pub use normality::{
    dyadic_probes, normality_residual, NormalityProbe, NormalityReport, NormalityThresholds,
    Verdict,
};
pub use pizzetti::{
    pizzetti_coefficients, spherical_mean_expansion_check, PizzettiCoefficients, Rational,
};

/// Radius up to which moments of non-compact densities are tabulated.
const TABLE_REACH: f64 = 1e6;
/// Panels per octave in the moment table.
const PANELS_PER_OCTAVE: f64 = 4.0;

fn moment_tol() -> Tolerance {
    Tolerance {
        abs: 1e-300,
        rel: 1e-13,
        max_intervals: 2000,
    }
}

/// Coefficients a_1..a_{k−1} of the sphere mean of `log|x − y|` in ℝ^{2k}.
pub fn kernel_coefficients(n: usize) -> Result<Vec<f64>> {
    check_dimension(n)?;
    let k = n / 2;
    // E[c^{2i}] over S^{n−1} = ∏_{l<i} (2l+1)/(n+2l)
    let moment = |i: usize| {
        (0..i).fold(Rational::from_integer(1), |acc, l| {
            acc * Rational::new(2 * l as i128 + 1, (n + 2 * l) as i128)
        })
    };
    // Chebyshev coefficients by T_{m+1} = 2c T_m − T_{m−1}
    let mut prev = vec![1i128];
    let mut cur = vec![0i128, 1];
    let mut out = Vec::with_capacity(k.saturating_sub(1));
    for m in 2..=2 * (k - 1).max(0) {
        let mut next = vec![0i128; m + 1];
        for (i, c) in cur.iter().enumerate() {
            next[i + 1] += 2 * c;
        }
        for (i, c) in prev.iter().enumerate() {
            next[i] -= c;
        }
        prev = std::mem::replace(&mut cur, next);
        if m % 2 == 0 {
            let mean = cur
                .iter()
                .enumerate()
                .filter(|(i, _)| i % 2 == 0)
                .fold(Rational::from_integer(0), |acc, (i, c)| {
                    acc + Rational::from_integer(*c) * moment(i / 2)
                });
            let a = -mean / Rational::from_integer(m as i128);
            out.push(*a.numer() as f64 / *a.denom() as f64);
        }
    }
    Ok(out)
}

#[derive(Clone)]
enum Shape {
    Zero,
    Smooth {
        p: Arc<dyn RadialFunction>,
        /// P vanishes beyond this radius.
        support: Option<f64>,
    },
    /// Uniform mass on the sphere |y| = radius.
    Shell { radius: f64, mass: f64 },
}

/// The moments entering v at one radius.
#[derive(Clone, Debug, PartialEq)]
pub struct Moments {
    pub m: f64,
    pub l: f64,
    /// N_j, j = 1..k−1
    pub n: Vec<f64>,
    /// H_j, j = 1..k−1
    pub h: Vec<f64>,
}

/// Q-density `P = Q e^{nu}` of a radial metric.
#[derive(Clone)]
pub struct QDensity {
    n: usize,
    shape: Shape,
    label: String,
    total: f64,
    total_abs: f64,
    /// Declared power decay of a non-compact density.
    decay: Option<f64>,
    kernel: Vec<f64>,
    edges: Vec<f64>,
    /// cumulative from 0: M, L, N_1.. at each edge
    forward: Vec<Vec<f64>>,
    /// cumulative from ∞: H_1.. at each edge
    backward: Vec<Vec<f64>>,
    breaks: Vec<f64>,
}

impl fmt::Debug for QDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QDensity")
            .field("n", &self.n)
            .field("label", &self.label)
            .field("total", &self.total)
            .field("total_abs", &self.total_abs)
            .finish()
    }
}

fn panel_edges(breaks: &[f64], reach: f64) -> Vec<f64> {
    let mut edges = vec![0.0];
    let step = 2f64.powf(1.0 / PANELS_PER_OCTAVE);
    let mut e = 2f64.powi(-12);
    while e < reach {
        edges.push(e);
        e *= step;
    }
    edges.push(reach);
    edges.extend(breaks.iter().copied().filter(|&b| b > 0.0 && b < reach));
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * b.abs());
    edges
}

/// Weight of moment `kind` against `A P(s)`: 0 → s^{n−1}, 1 → s^{n−1} log s,
/// 2 + i → s^{n+1+2i} (N_{i+1}).
fn forward_weight(n: usize, kind: usize, s: f64) -> f64 {
    match kind {
        0 => s.powi(n as i32 - 1),
        1 => s.powi(n as i32 - 1) * s.ln(),
        i => s.powi((n + 2 * (i - 1) - 1) as i32),
    }
}

/// Weight of H_j against `A P(s)`: s^{n−1−2j}.
fn backward_weight(n: usize, j: usize, s: f64) -> f64 {
    s.powi(n as i32 - 1 - 2 * j as i32)
}

impl QDensity {
    fn empty(n: usize, shape: Shape, label: String) -> Result<Self> {
        let kernel = kernel_coefficients(n)?;
        Ok(QDensity {
            n,
            shape,
            label,
            total: 0.0,
            total_abs: 0.0,
            decay: None,
            kernel,
            edges: Vec::new(),
            forward: Vec::new(),
            backward: Vec::new(),
            breaks: Vec::new(),
        })
    }

    /// P ≡ 0.
    pub fn zero(n: usize) -> Result<Self> {
        check_dimension(n)?;
        QDensity::empty(n, Shape::Zero, "zero".into())
    }

    /// Density supported on `[0, support]`, or on all of `[0, ∞)` with a declared power
    /// decay `|P| ≲ r^{−decay}` that must beat `r^{−n}` for `∫|P| dx` to be finite.
    pub fn smooth(
        n: usize,
        p: Arc<dyn RadialFunction>,
        support: Option<f64>,
        decay: Option<f64>,
        label: impl Into<String>,
    ) -> Result<Self> {
        check_dimension(n)?;
        match (support, decay) {
            (Some(s), _) if !(s > 0.0 && s.is_finite()) => {
                return Err(Error::Domain(format!("support radius must be positive, got {s}")))
            }
            (None, None) => {
                return Err(Error::Domain(
                    "a density without compact support needs a declared decay rate".into(),
                ))
            }
            (None, Some(d)) if !(d > n as f64) => {
                return Err(Error::Domain(format!(
                    "declared tail r^-{d} does not decay faster than r^-{n}"
                )))
            }
            _ => {}
        }
        let mut d = QDensity::empty(n, Shape::Smooth { p: p.clone(), support }, label.into())?;
        d.decay = if support.is_none() { decay } else { None };
        let reach = support.unwrap_or(TABLE_REACH);
        let mut breaks = p.breakpoints();
        breaks.retain(|&b| b > 0.0 && b < reach);
        if let Some(s) = support {
            breaks.push(s);
        }
        breaks.sort_by(f64::total_cmp);
        d.breaks = breaks;
        d.edges = panel_edges(&d.breaks, reach);
        let area = sphere_area(n)?;
        let kinds = 2 + d.kernel.len();
        let panels = d.edges.len() - 1;
        // absolute targets follow the mass accumulated so far, so panels where P has
        // decayed into rounding noise do not exhaust the adaptive budget
        let integrate = |w: &dyn Fn(f64) -> f64, a: f64, b: f64, mass: f64, abs: bool| {
            let tol = Tolerance {
                abs: (1e-15 * mass).max(1e-300),
                max_intervals: 200,
                ..moment_tol()
            };
            let f = |s: f64| {
                let v = area * w(s) * p.value(s);
                if abs {
                    v.abs()
                } else {
                    v
                }
            };
            adaptive_with_breaks(f, &[a, b], tol).value
        };
        let mass = |parts: &[f64]| parts.iter().map(|x| x.abs()).sum::<f64>();
        let mut fwd_parts = vec![Vec::with_capacity(panels); kinds];
        let mut bwd_parts = vec![Vec::with_capacity(panels); d.kernel.len()];
        let mut abs_parts = Vec::with_capacity(panels);
        for w in d.edges.windows(2) {
            for (kind, parts) in fwd_parts.iter_mut().enumerate() {
                let m = mass(parts);
                parts.push(integrate(&|s| forward_weight(n, kind, s), w[0], w[1], m, false));
            }
            for (j, parts) in bwd_parts.iter_mut().enumerate() {
                let m = mass(parts);
                parts.push(integrate(&|s| backward_weight(n, j + 1, s), w[0], w[1], m, false));
            }
            let m = mass(&abs_parts);
            abs_parts.push(integrate(&|s| forward_weight(n, 0, s), w[0], w[1], m, true));
        }
        let prefix = |parts: &[f64]| {
            (0..=parts.len())
                .map(|i| pairwise_sum(&parts[..i]))
                .collect::<Vec<_>>()
        };
        d.forward = fwd_parts.iter().map(|x| prefix(x)).collect();
        let mut total = *d.forward[0].last().unwrap();
        let mut total_abs = pairwise_sum(&abs_parts);
        let mut beyond = vec![0.0; d.kernel.len()];
        if support.is_none() {
            total += d.remainder(n as i32 - 1, reach, false);
            total_abs += d.remainder(n as i32 - 1, reach, true);
            for (j, b) in beyond.iter_mut().enumerate() {
                *b = d.remainder(n as i32 - 3 - 2 * j as i32, reach, false);
            }
        }
        d.backward = bwd_parts
            .iter()
            .zip(&beyond)
            .map(|(parts, b)| {
                (0..=parts.len())
                    .map(|i| pairwise_sum(&parts[i..]) + b)
                    .collect()
            })
            .collect();
        d.total = total;
        d.total_abs = total_abs;
        Ok(d)
    }

    /// ∫_a^∞ A s^m P(s) ds closed with the declared power tail `P(s) ≈ P(a)(s/a)^{−decay}`.
    fn remainder(&self, m: i32, a: f64, abs: bool) -> f64 {
        let (Shape::Smooth { p, .. }, Some(decay)) = (&self.shape, self.decay) else {
            return 0.0;
        };
        let area = sphere_area(self.n).expect("dimension checked");
        let pa = if abs { p.value(a).abs() } else { p.value(a) };
        area * pa * a.powi(m + 1) / (decay - (m + 1) as f64)
    }

    /// Mass `mass` spread uniformly over the sphere `|y| = radius` (a thin ring).
    pub fn shell(n: usize, radius: f64, mass: f64) -> Result<Self> {
        check_dimension(n)?;
        if !(radius > 0.0 && radius.is_finite() && mass.is_finite()) {
            return Err(Error::Domain(format!(
                "shell needs a positive radius and finite mass, got ({radius}, {mass})"
            )));
        }
        let mut d = QDensity::empty(
            n,
            Shape::Shell { radius, mass },
            format!("shell(s0={radius}, mass={mass})"),
        )?;
        d.total = mass;
        d.total_abs = mass.abs();
        d.breaks = vec![radius];
        Ok(d)
    }
    /// Centred Gaussian `A e^{−r²/(2w²)}` with the given total mass.
    pub fn gaussian(n: usize, total: f64, width: f64) -> Result<Self> {
        check_dimension(n)?;
        if !(width > 0.0) {
            return Err(Error::Domain(format!("width must be positive, got {width}")));
        }
        // ∫_{ℝⁿ} e^{−|y|²/(2w²)} dy = (2πw²)^{n/2}
        let amp = total / (2.0 * std::f64::consts::PI * width * width).powf(n as f64 / 2.0);
        let k = -0.5 / (width * width);
        let p = JetFn::new(move |r| (*r * *r).scale(k).exp().scale(amp));
        // e^{−800} is zero in double precision
        let mut d = QDensity::smooth(n, Arc::new(p), Some(40.0 * width), None, "")?;
        d.label = format!("gaussian(total={total}, width={width})");
        Ok(d)
    }

    /// Gaussian ring `A e^{−(r−center)²/(2w²)}` cut at `center ± 12w`, scaled to `total`.
    pub fn ring(n: usize, total: f64, center: f64, width: f64) -> Result<Self> {
        check_dimension(n)?;
        if !(width > 0.0 && center > 0.0) {
            return Err(Error::Domain(format!(
                "ring needs positive center and width, got ({center}, {width})"
            )));
        }
        let (lo, hi) = ((center - 12.0 * width).max(0.0), center + 12.0 * width);
        let k = -0.5 / (width * width);
        let area = sphere_area(n)?;
        let pw = (n - 1) as i32;
        let unit = adaptive_with_breaks(
            |s| area * s.powi(pw) * (k * (s - center).powi(2)).exp(),
            &[lo, center, hi],
            moment_tol(),
        )
        .value;
        let amp = total / unit;
        let p = JetFn::new(move |r| {
            let x = r.value();
            if x < lo || x > hi {
                r.scale(0.0)
            } else {
                r.add_scalar(-center).powi(2).scale(k).exp().scale(amp)
            }
        })
        .with_breakpoints(if lo > 0.0 { vec![lo, center, hi] } else { vec![center, hi] });
        let mut d = QDensity::smooth(n, Arc::new(p), Some(hi), None, "")?;
        d.label = format!("ring(total={total}, center={center}, width={width})");
        Ok(d)
    }

    /// Density `Q e^{nu}` read off a metric's curvature (jets or node table).
    pub fn from_metric(
        m: &ConformalMetric,
        support: Option<f64>,
        decay: Option<f64>,
    ) -> Result<Self> {
        let metric = m.clone();
        // probe once so coverage problems surface here rather than inside quadrature
        metric.point(support.unwrap_or(1.0).min(metric.curvature_reach()))?;
        let n = m.dimension();
        let p = MetricDensity { metric };
        let label = format!("Q e^(nu) of {}", m.label());
        QDensity::smooth(n, Arc::new(p), support, decay, label)
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// ∫_{ℝⁿ} P dx.
    pub fn total(&self) -> f64 {
        self.total
    }

    /// ∫_{ℝⁿ} |P| dx.
    pub fn total_abs(&self) -> f64 {
        self.total_abs
    }

    /// total / c_n, the asymptotic logarithmic slope of −v.
    pub fn alpha(&self) -> f64 {
        self.total / c_n(self.n).expect("dimension checked")
    }

    /// Radius beyond which P vanishes, if any.
    pub fn support(&self) -> Option<f64> {
        match &self.shape {
            Shape::Zero => Some(0.0),
            Shape::Smooth { support, .. } => *support,
            Shape::Shell { radius, .. } => Some(*radius),
        }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breaks
    }

    /// P(r); a shell has no pointwise value and reports 0 off its sphere.
    pub fn value(&self, r: f64) -> f64 {
        match &self.shape {
            Shape::Smooth { p, support } => {
                if support.is_some_and(|s| r > s) {
                    0.0
                } else {
                    p.value(r)
                }
            }
            _ => 0.0,
        }
    }

    /// Coefficients a_j of the kernel's sphere mean.
    pub fn kernel(&self) -> &[f64] {
        &self.kernel
    }

    /// M, L, N_j, H_j at r.
    pub fn moments(&self, r: f64) -> Result<Moments> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("radius must be nonnegative, got {r}")));
        }
        let nk = self.kernel.len();
        match &self.shape {
            Shape::Zero => Ok(Moments {
                m: 0.0,
                l: 0.0,
                n: vec![0.0; nk],
                h: vec![0.0; nk],
            }),
            Shape::Shell { radius, mass } => {
                let inside = r < *radius;
                let pw = |j: usize| radius.powi(2 * j as i32);
                Ok(Moments {
                    m: if inside { 0.0 } else { *mass },
                    l: if inside { 0.0 } else { mass * radius.ln() },
                    n: (1..=nk).map(|j| if inside { 0.0 } else { mass * pw(j) }).collect(),
                    h: (1..=nk).map(|j| if inside { mass / pw(j) } else { 0.0 }).collect(),
                })
            }
            Shape::Smooth { p, support } => {
                let n = self.n;
                let area = sphere_area(n)?;
                let integrate = |w: &dyn Fn(f64) -> f64, a: f64, b: f64| {
                    let mut seg = vec![a];
                    seg.extend(self.breaks.iter().copied().filter(|&x| x > a && x < b));
                    seg.push(b);
                    adaptive_with_breaks(|s| area * w(s) * p.value(s), &seg, moment_tol()).value
                };
                let last = *self.edges.last().unwrap();
                let r_fwd = match support {
                    Some(s) => r.min(*s),
                    None => r,
                };
                let mut fwd: Vec<f64> = Vec::with_capacity(2 + nk);
                if r_fwd >= last {
                    for (kind, table) in self.forward.iter().enumerate() {
                        let base = *table.last().unwrap();
                        let extra = if r_fwd > last {
                            integrate(&|s| forward_weight(n, kind, s), last, r_fwd)
                        } else {
                            0.0
                        };
                        fwd.push(base + extra);
                    }
                } else {
                    let i = self.edges.partition_point(|&e| e <= r_fwd) - 1;
                    let e = self.edges[i];
                    for (kind, table) in self.forward.iter().enumerate() {
                        let extra = if r_fwd > e {
                            integrate(&|s| forward_weight(n, kind, s), e, r_fwd)
                        } else {
                            0.0
                        };
                        fwd.push(table[i] + extra);
                    }
                }
                let h = if r >= last {
                    if support.is_some() {
                        vec![0.0; nk]
                    } else {
                        (1..=nk)
                            .map(|j| self.remainder(n as i32 - 1 - 2 * j as i32, r, false))
                            .collect()
                    }
                } else {
                    let i = self.edges.partition_point(|&e| e <= r);
                    let e = self.edges[i];
                    self.backward
                        .iter()
                        .enumerate()
                        .map(|(j, table)| {
                            let extra = if e > r {
                                integrate(&|s| backward_weight(n, j + 1, s), r, e)
                            } else {
                                0.0
                            };
                            table[i] + extra
                        })
                        .collect()
                };
                Ok(Moments {
                    m: fwd[0],
                    l: fwd[1],
                    n: fwd[2..].to_vec(),
                    h,
                })
            }
        }
    }

    /// Taylor coefficients of P at r (zeros off the support or for shells).
    fn p_jet(&self, r: f64, order: usize) -> Jet {
        match &self.shape {
            Shape::Smooth { p, support } if !support.is_some_and(|s| r > s) => p.jet(r, order),
            _ => Jet::constant(0.0, r, order),
        }
    }

    /// Jet of v at r, carrying `order` derivatives.
    pub fn potential_jet(&self, r: f64, order: usize) -> Result<Jet> {
        let n = self.n;
        let cn = c_n(n)?;
        let area = sphere_area(n)?;
        let mom = self.moments(r)?;
        let v0 = if r == 0.0 {
            0.0
        } else {
            let mut acc = r.ln() * mom.m - mom.l;
            for (j, a) in self.kernel.iter().enumerate() {
                let e = 2 * (j as i32 + 1);
                acc += a * (r.powi(-e) * mom.n[j] + r.powi(e) * mom.h[j]);
            }
            -acc / cn
        };
        if order == 0 {
            return Ok(Jet::constant(v0, r, 0));
        }
        let p = self.p_jet(r, order - 1);
        let vp = if r == 0.0 {
            // Series of v′ at the origin straight from the Taylor coefficients p_i of P:
            // M/r → A p_i r^{n+i−1}/(n+i), N_j/r^{2j+1} → A p_i r^{n+i−1}/(n+2j+i),
            // r^{2j−1}H_j → H_j(0) r^{2j−1} − A p_i r^{n+i−1}/(n−2j+i).
            let o = order - 1;
            let mut c = vec![0.0; o + 1];
            for i in 0..=p.order() {
                let d = n + i - 1;
                if d > o {
                    break;
                }
                let pi = p.coeff(i);
                let mut term = pi / (n + i) as f64;
                for (j, a) in self.kernel.iter().enumerate() {
                    let jj = j + 1;
                    let both = 1.0 / (n + 2 * jj + i) as f64 + 1.0 / (n - 2 * jj + i) as f64;
                    term -= 2.0 * jj as f64 * a * pi * both;
                }
                c[d] += area * term;
            }
            for (j, a) in self.kernel.iter().enumerate() {
                let jj = j + 1;
                let d = 2 * jj - 1;
                if d <= o {
                    c[d] += 2.0 * jj as f64 * a * mom.h[j];
                }
            }
            Jet::from_derivatives(0.0, &taylor_to_derivatives(&c)).scale(-1.0 / cn)
        } else {
            let x = Jet::variable(r, order);
            let xi = x.recip();
            let m_jet = (x.powi(n as u32 - 1) * p).scale(area).integrate(mom.m);
            let mut acc = m_jet * xi;
            for (j, a) in self.kernel.iter().enumerate() {
                let jj = j as u32 + 1;
                let nj = (x.powi(n as u32 - 1 + 2 * jj) * p).scale(area).integrate(mom.n[j]);
                let hj = (x.powi(n as u32 - 1 - 2 * jj) * p).scale(-area).integrate(mom.h[j]);
                let term = hj * x.powi(2 * jj - 1) - nj * xi.powi(2 * jj + 1);
                acc = acc + term.scale(2.0 * jj as f64 * a);
            }
            acc.scale(-1.0 / cn)
        };
        Ok(vp.integrate(v0).truncate(order))
    }
}

fn taylor_to_derivatives(c: &[f64]) -> Vec<f64> {
    let mut f = 1.0;
    c.iter()
        .enumerate()
        .map(|(k, x)| {
            if k > 0 {
                f *= k as f64;
            }
            x * f
        })
        .collect()
}

/// `Q e^{nu}` of a metric as a radial function.
struct MetricDensity {
    metric: ConformalMetric,
}

impl RadialFunction for MetricDensity {
    fn jet(&self, r: f64, order: usize) -> Jet {
        let v = self.metric.point(r).map(|p| p.q_density).unwrap_or(f64::NAN);
        Jet::constant(v, r, order.min(0))
    }

    fn breakpoints(&self) -> Vec<f64> {
        let b = self.metric.breakpoints();
        // node tables can be dense; cap the number of forced splits
        if b.len() > 4096 {
            Vec::new()
        } else {
            b
        }
    }
}

/// v(r) = (1/c_n)∫ log(|y|/|x−y|) P(y) dy at |x| = r.
pub fn log_potential(p: &QDensity, r: f64) -> Result<f64> {
    Ok(p.potential_jet(r, 0)?.value())
}

/// v′(r).
pub fn log_potential_gradient(p: &QDensity, r: f64) -> Result<f64> {
    Ok(p.potential_jet(r, 1)?.derivative(1))
}

/// Δv(r) = v″ + (n−1)v′/r (shells: off their sphere only).
pub fn log_potential_laplacian(p: &QDensity, r: f64) -> Result<f64> {
    let j = p.potential_jet(r, 2)?;
    let d = j.deriv();
    Ok((d.deriv() + d.div_var().scale((p.n - 1) as f64)).value())
}

/// `u = v + constant + quadratic·r²` with v the log potential of a density.
#[derive(Clone, Debug)]
pub struct PotentialFactor {
    density: Arc<QDensity>,
    constant: f64,
    quadratic: f64,
}

impl PotentialFactor {
    pub fn new(density: Arc<QDensity>, constant: f64, quadratic: f64) -> Self {
        PotentialFactor {
            density,
            constant,
            quadratic,
        }
    }

    pub fn density(&self) -> &QDensity {
        &self.density
    }
}

impl RadialFunction for PotentialFactor {
    fn jet(&self, r: f64, order: usize) -> Jet {
        let v = self
            .density
            .potential_jet(r, order)
            .unwrap_or_else(|_| Jet::constant(f64::NAN, r, order));
        let x = Jet::variable(r, order);
        v.add_scalar(self.constant) + (x * x).scale(self.quadratic)
    }

    /// Exact only in the plane: in higher dimensions v keeps r^{−2j} corrections.
    fn log_tail(&self) -> Option<LogTail> {
        let d = &self.density;
        if self.quadratic != 0.0 || !d.kernel.is_empty() {
            return None;
        }
        let r_max = d.support()?.max(f64::MIN_POSITIVE);
        let cn = c_n(d.n).ok()?;
        let mom = d.moments(r_max).ok()?;
        Some(LogTail {
            beta: -d.total / cn,
            c: mom.l / cn + self.constant,
            r_max,
        })
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.density.breaks.clone()
    }
}

/// Metric `e^{2u}|dx|²` with `u = v + constant` built from a density.
pub fn potential_metric(
    density: Arc<QDensity>,
    constant: f64,
    nodes: Vec<f64>,
    label: impl Into<String>,
) -> Result<ConformalMetric> {
    let n = density.n;
    ConformalMetric::analytic(
        n,
        Arc::new(PotentialFactor::new(density, constant, 0.0)),
        nodes,
        label,
    )
}

/// One row of [`annulus_decay_series`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AnnulusDecay {
    pub r: f64,
    pub grad_v_sq_avg: f64,
    pub lap_v_avg: f64,
}

/// ⨍_{B_{2r}∖B_r} |∇v|² and ⨍_{B_{2r}∖B_r} Δv at each radius.
pub fn annulus_decay_series(p: &QDensity, radii: &[f64]) -> Result<Vec<AnnulusDecay>> {
    let n = p.n;
    radii
        .iter()
        .map(|&r| {
            if !(r > 0.0) {
                return Err(Error::Domain(format!("annulus radius must be positive, got {r}")));
            }
            let grad = annulus_mean(n, r, &p.breaks, 0.0, |s| {
                log_potential_gradient(p, s).unwrap_or(f64::NAN).powi(2)
            });
            // divergence theorem: ∫_A Δv dx = nω_n [s^{n−1} v′(s)]_r^{2r}; this also covers
            // shells, whose Δv is a measure
            let lap = annulus_flux_mean(n, r, |s| log_potential_gradient(p, s))?;
            if !(grad.is_finite() && lap.is_finite()) {
                return Err(Error::Coverage { r, lo: 0.0, hi: f64::INFINITY });
            }
            Ok(AnnulusDecay {
                r,
                grad_v_sq_avg: grad,
                lap_v_avg: lap,
            })
        })
        .collect()
}

/// ⨍_{B_{2r}∖B_r} Δf from the radial derivative f′ on the two boundary spheres.
pub(crate) fn annulus_flux_mean(n: usize, r: f64, df: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let k = n as i32;
    // [s^{n−1} f′]_r^{2r} / ∫_r^{2r} s^{n−1} ds
    let num = (2.0 * r).powi(k - 1) * df(2.0 * r)? - r.powi(k - 1) * df(r)?;
    Ok(num * n as f64 / ((2f64.powi(k) - 1.0) * r.powi(k)))
}

/// Least-squares slope of log y against log x.
pub fn loglog_slope(points: &[(f64, f64)]) -> Result<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Domain("slope fit needs two positive points".into()));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
