//! Reference metrics with closed forms and known values.
//!
//! Each entry carries the metric, the density it was built from (if any), the values it is
//! expected to produce and which curvature hypotheses it is designed to satisfy or break.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::constants::c_n;
use crate::curvature::ConformalMetric;
use crate::error::{check_dimension, Error, Result};
use crate::field::{JetFn, NodeLayout, RadialFunction};
use crate::potential::{PotentialFactor, QDensity};

/// Where an expected value comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    /// Forced by how the entry is built.
    Construction,
    /// Worked out by hand (closed-form calculus or a sign analysis).
    Derivation,
    /// A published identity; the numbers themselves are derived.
    Theorem,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Number(f64),
    Bool(bool),
    Text(&'static str),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Expected {
    pub value: Value,
    /// Absolute tolerance for numbers.
    pub tolerance: f64,
    pub origin: Origin,
}

/// For each hypothesis: `Some(true)` designed to hold, `Some(false)` designed to fail,
/// `None` not targeted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct HypothesisProfile {
    /// ∫|Q| dv < ∞
    pub q_integrable: Option<bool>,
    /// ∫(R⁻)^{n/2} dv < ∞
    pub r_minus_integrable: Option<bool>,
    /// ∫|R|² dv < ∞ (n = 4)
    pub r_sq_integrable: Option<bool>,
    /// (1/(2π²))∫σ₂ dv < 1 (n = 4)
    pub sigma2_below_one: Option<bool>,
    pub complete: Option<bool>,
}

impl fmt::Display for HypothesisProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = |x: Option<bool>| match x {
            Some(true) => "+",
            Some(false) => "-",
            None => "?",
        };
        write!(
            f,
            "Q{} Rminus{} Rsq{} sigma2{} complete{}",
            mark(self.q_integrable),
            mark(self.r_minus_integrable),
            mark(self.r_sq_integrable),
            mark(self.sigma2_below_one),
            mark(self.complete)
        )
    }
}

#[derive(Clone)]
pub struct ZooEntry {
    pub name: &'static str,
    pub n: usize,
    pub params: BTreeMap<&'static str, f64>,
    pub metric: ConformalMetric,
    pub density: Option<Arc<QDensity>>,
    pub expected: BTreeMap<&'static str, Expected>,
    pub hypothesis_profile: HypothesisProfile,
    pub warnings: Vec<String>,
}

impl fmt::Debug for ZooEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ZooEntry")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("params", &self.params)
            .finish()
    }
}

#[derive(Serialize)]
struct EntryJson<'a> {
    name: &'a str,
    n: usize,
    label: &'a str,
    params: &'a BTreeMap<&'static str, f64>,
    expected: &'a BTreeMap<&'static str, Expected>,
    hypothesis_profile: &'a HypothesisProfile,
    warnings: &'a [String],
}

impl ZooEntry {
    /// Expected number under `key`, if any.
    pub fn expected_number(&self, key: &str) -> Option<(f64, f64)> {
        match self.expected.get(key)? {
            Expected {
                value: Value::Number(v),
                tolerance,
                ..
            } => Some((*v, *tolerance)),
            _ => None,
        }
    }

    /// One catalog line: name, dimension, hypothesis profile.
    pub fn summary(&self) -> String {
        format!("{}\tn={}\t{}", self.name, self.n, self.hypothesis_profile)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(EntryJson {
            name: self.name,
            n: self.n,
            label: self.metric.label(),
            params: &self.params,
            expected: &self.expected,
            hypothesis_profile: &self.hypothesis_profile,
            warnings: &self.warnings,
        })
        .expect("plain data")
    }
}

fn num(value: f64, tolerance: f64, origin: Origin) -> Expected {
    Expected {
        value: Value::Number(value),
        tolerance,
        origin,
    }
}

fn flag(value: bool, origin: Origin) -> Expected {
    Expected {
        value: Value::Bool(value),
        tolerance: 0.0,
        origin,
    }
}

fn text(value: &'static str, origin: Origin) -> Expected {
    Expected {
        value: Value::Text(value),
        tolerance: 0.0,
        origin,
    }
}

/// Report nodes: 41 uniform on [0, 2] and 40 geometric on (2, r_max].
pub fn default_nodes(r_max: f64) -> Result<Vec<f64>> {
    let mut nodes = NodeLayout::uniform(0.0, 2.0, 41);
    if r_max > 2.0 {
        let geo = NodeLayout::geometric(2.0, r_max, 41).build()?;
        nodes.extend(geo.into_iter().skip(1));
    }
    Ok(nodes)
}

const DEFAULT_RMAX: f64 = 1e3;

/// u ≡ 0.
pub fn zoo_flat(n: usize) -> Result<ZooEntry> {
    check_dimension(n)?;
    let u: Arc<dyn RadialFunction> = Arc::new(JetFn::new(|r| r.scale(0.0)));
    let metric = ConformalMetric::analytic(n, u, default_nodes(DEFAULT_RMAX)?, "flat")?;
    let c = Origin::Construction;
    let expected = BTreeMap::from([
        ("Q", num(0.0, 1e-12, c)),
        ("R", num(0.0, 1e-12, c)),
        ("iso_ratio", num(1.0, 1e-9, c)),
        ("deficit_residual", num(0.0, 1e-6, c)),
        ("total_q", num(0.0, 1e-12, c)),
        ("complete", flag(true, c)),
        ("verdict", text("normal", c)),
    ]);
    Ok(ZooEntry {
        name: "flat",
        n,
        params: BTreeMap::new(),
        metric,
        density: Some(Arc::new(QDensity::zero(n)?)),
        expected,
        hypothesis_profile: HypothesisProfile {
            q_integrable: Some(true),
            r_minus_integrable: Some(true),
            r_sq_integrable: (n == 4).then_some(true),
            sigma2_below_one: (n == 4).then_some(true),
            complete: Some(true),
        },
        warnings: Vec::new(),
    })
}

/// Stereographic pullback of the round sphere, `u = log(2λ/(1 + λ²r²))`.
pub fn zoo_sphere(n: usize, lambda: f64) -> Result<ZooEntry> {
    check_dimension(n)?;
    if n != 2 && n != 4 {
        return Err(Error::UnsupportedDimension { op: "zoo_sphere", n });
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!("sphere scale must be positive, got {lambda}")));
    }
    let l2 = lambda * lambda;
    let c0 = (2.0 * lambda).ln();
    let u: Arc<dyn RadialFunction> = Arc::new(JetFn::new(move |r| {
        (*r * *r).scale(l2).add_scalar(1.0).ln().scale(-1.0).add_scalar(c0)
    }));
    // Δ²u sums r^{−4}-sized terms to an r^{−8} result, losing about ε·(λr)⁴ relative
    // accuracy; report nodes stop where Q still has seven digits
    let metric = ConformalMetric::analytic(
        n,
        u,
        default_nodes(1e2 / lambda)?,
        format!("sphere(lambda={lambda})"),
    )?;
    let d = Origin::Derivation;
    let nf = n as f64;
    let mut expected = BTreeMap::from([
        ("R", num(nf * (nf - 1.0), 1e-9, d)),
        ("total_q", num(2.0, 1e-4, d)),
        ("complete", flag(false, d)),
        ("verdict", text("normal", d)),
        ("deficit_status", text(crate::geometry::HYPOTHESES_VIOLATED, d)),
    ]);
    if n == 4 {
        expected.insert("Q", num(3.0, 1e-7, d));
        expected.insert("sigma2", num(1.5, 1e-7, d));
        expected.insert("E2", num(0.0, 1e-7, d));
        expected.insert("flux", num(0.0, 1e-9, d));
    } else {
        expected.insert("Q", num(0.5, 1e-9, d));
    }
    Ok(ZooEntry {
        name: "sphere",
        n,
        params: BTreeMap::from([("lambda", lambda)]),
        metric,
        density: None,
        expected,
        hypothesis_profile: HypothesisProfile {
            q_integrable: Some(true),
            r_minus_integrable: Some(true),
            r_sq_integrable: (n == 4).then_some(true),
            sigma2_below_one: (n == 4).then_some(false),
            complete: Some(false),
        },
        warnings: Vec::new(),
    })
}

fn cone_density(n: usize, alpha: f64, width: f64) -> Result<Arc<QDensity>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "cone angle parameter must lie in (0, 1), got {alpha}"
        )));
    }
    let total = alpha * c_n(n)?;
    Ok(Arc::new(QDensity::ring(n, total, 1.0, width)?))
}

/// Potential-built cone: `u = v` for a Gaussian ring at radius 1 with mass `α c_n`.
pub fn zoo_cone(n: usize, alpha: f64, width: f64) -> Result<ZooEntry> {
    check_dimension(n)?;
    let density = cone_density(n, alpha, width)?;
    let u = Arc::new(PotentialFactor::new(density.clone(), 0.0, 0.0));
    let metric = ConformalMetric::analytic(
        n,
        u,
        default_nodes(DEFAULT_RMAX)?,
        format!("cone(alpha={alpha}, width={width})"),
    )?;
    let mut warnings = Vec::new();
    if alpha >= 0.99 {
        warnings.push(format!(
            "alpha = {alpha} is close to 1: volume growth r^(n(1-alpha)) is slow and the isoperimetric limit converges poorly"
        ));
    }
    let (c, d, t) = (Origin::Construction, Origin::Derivation, Origin::Theorem);
    let expected = BTreeMap::from([
        ("total_q", num(alpha, 1e-6, c)),
        ("iso_limit", num(1.0 - alpha, 0.02, t)),
        ("verdict", text("normal", c)),
        ("h_spread", num(0.0, 1e-8, c)),
        ("R_minus_tail", num(0.0, 1e-12, d)),
        ("complete", flag(true, d)),
    ]);
    Ok(ZooEntry {
        name: "cone",
        n,
        params: BTreeMap::from([("alpha", alpha), ("width", width)]),
        metric,
        density: Some(density),
        expected,
        hypothesis_profile: HypothesisProfile {
            q_integrable: Some(true),
            r_minus_integrable: Some(true),
            // R ~ r^{2α−2} makes ∫R²dv diverge logarithmically
            r_sq_integrable: (n == 4).then_some(false),
            sigma2_below_one: None,
            complete: Some(true),
        },
        warnings,
    })
}

/// Non-normal metric `u = v + r²` over the cone density (n = 4).
pub fn zoo_nonnormal(n: usize, alpha: f64) -> Result<ZooEntry> {
    if n != 4 {
        return Err(Error::UnsupportedDimension {
            op: "zoo_nonnormal",
            n,
        });
    }
    let density = cone_density(n, alpha, 0.1)?;
    let u = Arc::new(PotentialFactor::new(density.clone(), 0.0, 1.0));
    // e^{4r²} leaves double range near r = 13
    let mut nodes = NodeLayout::uniform(0.0, 2.0, 41);
    nodes.extend(NodeLayout::geometric(2.0, 10.0, 17).build()?.into_iter().skip(1));
    let metric = ConformalMetric::analytic(n, u, nodes, format!("nonnormal(alpha={alpha})"))?;
    let (c, d) = (Origin::Construction, Origin::Derivation);
    let expected = BTreeMap::from([
        ("verdict", text("non-normal", c)),
        ("lap_h_avg", num(8.0, 1e-6, c)),
        ("total_Rminus_pow", text("diverges-numerically", d)),
    ]);
    Ok(ZooEntry {
        name: "nonnormal",
        n,
        params: BTreeMap::from([("alpha", alpha)]),
        metric,
        density: Some(density),
        expected,
        hypothesis_profile: HypothesisProfile {
            q_integrable: Some(true),
            r_minus_integrable: Some(false),
            r_sq_integrable: Some(false),
            sigma2_below_one: None,
            complete: Some(true),
        },
        warnings: Vec::new(),
    })
}

/// Entry names understood by [`by_name`].
pub const NAMES: [&str; 4] = ["flat", "sphere", "cone", "nonnormal"];

/// Parameters for [`by_name`]; unset fields take the catalog defaults.
#[derive(Clone, Copy, Debug, Default)]
pub struct ZooParams {
    pub n: Option<usize>,
    pub alpha: Option<f64>,
    pub lambda: Option<f64>,
    pub width: Option<f64>,
}

pub fn by_name(name: &str, p: ZooParams) -> Result<ZooEntry> {
    let n = p.n.unwrap_or(4);
    match name {
        "flat" => zoo_flat(n),
        "sphere" => zoo_sphere(n, p.lambda.unwrap_or(1.0)),
        "cone" => zoo_cone(n, p.alpha.unwrap_or(0.5), p.width.unwrap_or(0.1)),
        "nonnormal" => zoo_nonnormal(n, p.alpha.unwrap_or(0.5)),
        other => Err(Error::Invalid(format!(
            "unknown zoo entry '{other}' (known: {})",
            NAMES.join(", ")
        ))),
    }
}

/// The catalog at default parameters.
pub fn list() -> Result<Vec<ZooEntry>> {
    NAMES
        .iter()
        .map(|name| by_name(name, ZooParams::default()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_and_errors() {
        let all = list().unwrap();
        assert_eq!(all.len(), 4);
        for e in &all {
            assert!(!e.expected.is_empty());
            assert!(e.summary().starts_with(e.name));
        }
        assert!(matches!(zoo_cone(4, 1.0, 0.1), Err(Error::Domain(_))));
        assert!(matches!(zoo_cone(4, 0.0, 0.1), Err(Error::Domain(_))));
        assert!(zoo_cone(4, 0.99, 0.1).unwrap().warnings.len() == 1);
        assert!(zoo_cone(4, 0.5, 0.1).unwrap().warnings.is_empty());
        assert!(matches!(zoo_sphere(6, 1.0), Err(Error::UnsupportedDimension { .. })));
        assert!(matches!(by_name("bogus", ZooParams::default()), Err(Error::Invalid(_))));
    }

    #[test]
    fn sphere_scale_does_not_change_curvature() {
        let e = zoo_sphere(4, 3.0).unwrap();
        for r in [0.0, 0.2, 5.0] {
            let p = e.metric.point(r).unwrap();
            assert!((p.scalar() - 12.0).abs() < 1e-9);
            assert!((p.q(4) - 3.0).abs() < 1e-9);
        }
    }
}
