//! Normality residual `h = u − v` and its annulus diagnostics.

use std::fmt::Write as _;

use serde::Serialize;

use super::{annulus_flux_mean, log_potential, log_potential_gradient, QDensity};
use crate::constants::Conventions;
use crate::curvature::ConformalMetric;
use crate::error::{Error, Result};
use crate::field::{annulus_mean, fmt_f64, RadialProfile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Normal,
    NonNormal,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Normal => "normal",
            Verdict::NonNormal => "non-normal",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Envelope parameters for the finite-probe verdict.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormalityThresholds {
    /// Largest admissible `max h − min h`.
    pub h_spread: f64,
    /// Scale of the `(1 + r)^{−2}` envelope for annulus averages of Δh.
    pub lap: f64,
    /// A probe is a clear violation when its average exceeds the envelope by this factor.
    pub violation_factor: f64,
    /// Consecutive clear violations needed for a non-normal verdict.
    pub consecutive: usize,
}

impl Default for NormalityThresholds {
    fn default() -> Self {
        NormalityThresholds {
            h_spread: 1e-4,
            lap: 1e-4,
            violation_factor: 100.0,
            consecutive: 3,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NormalityProbe {
    pub r: f64,
    pub h: f64,
    /// ⨍_{B_{2r}∖B_r} Δh
    pub lap_h_avg: f64,
    /// ⨍_{B_{2r}∖B_r} |∇v|²
    pub grad_v_sq_avg: f64,
    pub envelope: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct NormalityReport {
    pub n: usize,
    pub label: String,
    pub verdict: Verdict,
    pub h_spread: f64,
    pub lap_u_sup: f64,
    pub thresholds: NormalityThresholds,
    pub probes: Vec<NormalityProbe>,
    #[serde(skip)]
    pub h: RadialProfile,
}

impl NormalityReport {
    pub fn to_json(&self) -> Result<serde_json::Value> {
        let mut v = serde_json::to_value(self).map_err(|e| Error::Parse(e.to_string()))?;
        v["conventions"] = serde_json::to_value(Conventions::for_dimension(self.n)?)
            .map_err(|e| Error::Parse(e.to_string()))?;
        Ok(v)
    }

    /// CSV with columns `r,h,lap_h_avg,grad_v_sq_avg,envelope`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,h,lap_h_avg,grad_v_sq_avg,envelope\n");
        for p in &self.probes {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                fmt_f64(p.r),
                fmt_f64(p.h),
                fmt_f64(p.lap_h_avg),
                fmt_f64(p.grad_v_sq_avg),
                fmt_f64(p.envelope)
            );
        }
        out
    }
}

/// Measures `h = u − v` at the probe radii and classifies the metric.
///
/// `normal` requires a small spread of h and every annulus average of Δh inside the
/// envelope `lap·(1 + r)^{−2}·max(1, sup|Δu|)`; `non-normal` requires clear violations at
/// consecutive probes; anything else is `inconclusive`.
pub fn normality_residual(
    m: &ConformalMetric,
    p: &QDensity,
    probes: &[f64],
    thresholds: NormalityThresholds,
) -> Result<NormalityReport> {
    let n = m.dimension();
    if p.dimension() != n {
        return Err(Error::Invalid(format!(
            "density is {}-dimensional, metric is {n}-dimensional",
            p.dimension()
        )));
    }
    if probes.is_empty() {
        return Err(Error::Invalid("no probe radii".into()));
    }
    let reach = m.curvature_reach();
    for &r in probes {
        if !(r > 0.0) || 2.0 * r > reach {
            return Err(Error::Coverage {
                r: 2.0 * r,
                lo: 0.0,
                hi: reach,
            });
        }
    }
    let mut breaks: Vec<f64> = p.breakpoints().to_vec();
    let mb = m.breakpoints();
    if mb.len() <= 4096 {
        breaks.extend(mb);
    }
    breaks.sort_by(f64::total_cmp);

    let lap_u = |s: f64| m.point(s).map(|pt| pt.lap_u).unwrap_or(f64::NAN);
    let du = |s: f64| m.point(s).map(|pt| pt.du);
    let mut rows = Vec::with_capacity(probes.len());
    let mut lap_u_sup: f64 = 0.0;
    for &r in probes {
        let h = m.u(r)? - log_potential(p, r)?;
        // annulus means of Laplacians through boundary fluxes
        let lap_h = annulus_flux_mean(n, r, |s| Ok(du(s)? - log_potential_gradient(p, s)?))?;
        let lap_u_avg = annulus_flux_mean(n, r, du)?;
        let grad = annulus_mean(n, r, &breaks, 0.0, |s| {
            log_potential_gradient(p, s).unwrap_or(f64::NAN).powi(2)
        });
        if !(lap_h.is_finite() && grad.is_finite() && h.is_finite()) {
            return Err(Error::Coverage {
                r,
                lo: 0.0,
                hi: reach,
            });
        }
        for x in [lap_u(r), lap_u(2.0 * r), lap_u_avg] {
            if x.is_finite() {
                lap_u_sup = lap_u_sup.max(x.abs());
            }
        }
        rows.push(NormalityProbe {
            r,
            h,
            lap_h_avg: lap_h,
            grad_v_sq_avg: grad,
            envelope: 0.0,
        });
    }
    let scale = lap_u_sup.max(1.0);
    for row in &mut rows {
        row.envelope = thresholds.lap * (1.0 + row.r).powi(-2) * scale;
    }
    let h_max = rows.iter().map(|x| x.h).fold(f64::NEG_INFINITY, f64::max);
    let h_min = rows.iter().map(|x| x.h).fold(f64::INFINITY, f64::min);
    let h_spread = h_max - h_min;

    let inside = rows.iter().all(|x| x.lap_h_avg.abs() < x.envelope);
    let mut run = 0;
    let mut violated = false;
    for x in &rows {
        if x.lap_h_avg.abs() > thresholds.violation_factor * x.envelope {
            run += 1;
            violated |= run >= thresholds.consecutive;
        } else {
            run = 0;
        }
    }
    let verdict = if h_spread < thresholds.h_spread && inside {
        Verdict::Normal
    } else if violated {
        Verdict::NonNormal
    } else {
        Verdict::Inconclusive
    };
    let h = RadialProfile::new(
        rows.iter().map(|x| x.r).collect(),
        rows.iter().map(|x| x.h).collect(),
    )?;
    Ok(NormalityReport {
        n,
        label: m.label().to_string(),
        verdict,
        h_spread,
        lap_u_sup,
        thresholds,
        probes: rows,
        h,
    })
}

/// Dyadic probe radii `r0, 2r0, …` not exceeding `r_last`.
pub fn dyadic_probes(r0: f64, r_last: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = r0;
    while r <= r_last * (1.0 + 1e-12) {
        out.push(r);
        r *= 2.0;
    }
    out
}
