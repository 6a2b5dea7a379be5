//! Subcommand bodies: build the metric, run the module operation, write the reports.

use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde_json::{json, Value};

use qlab_core::constants::Conventions;
use qlab_core::curvature::{curvature_report, ConformalMetric};
use qlab_core::field::{fmt_f64, NodeLayout, RadialProfile};
use qlab_core::geometry::{
    deficit_check, divergence_flux, geometry_series, route_consistency, CurvatureIntegral, Flag,
    HypothesisReport,
};
use qlab_core::potential::oracle::{monte_carlo_log_kernel, ring_sampler};
use qlab_core::potential::{
    dyadic_probes, log_potential, normality_residual, pizzetti_coefficients, NormalityThresholds,
    QDensity,
};
use qlab_core::zoo::{self, default_nodes, ZooEntry, ZooParams};

use crate::config::{MetricSource, RunConfig};
use crate::output::{ensure_dir, json_text, write_atomic};

/// Metric under study with whatever the catalog knows about it.
struct Subject {
    metric: ConformalMetric,
    entry: Option<ZooEntry>,
}

impl Subject {
    fn load(cfg: &RunConfig) -> Result<Self> {
        match &cfg.metric {
            MetricSource::Zoo(name) => {
                let entry = zoo::by_name(name, params(cfg))?;
                Ok(Subject {
                    metric: entry.metric.clone(),
                    entry: Some(entry),
                })
            }
            MetricSource::Profile(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading profile {}", path.display()))?;
                let profile = RadialProfile::from_csv(&text)?;
                let label = path
                    .file_name()
                    .map(|f| f.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "profile".into());
                Ok(Subject {
                    metric: ConformalMetric::sampled(cfg.n, profile, label)?,
                    entry: None,
                })
            }
        }
    }

    fn last_node(&self) -> f64 {
        *self.metric.nodes().last().expect("metrics have nodes")
    }

    fn warnings(&self) -> Vec<String> {
        self.entry
            .as_ref()
            .map(|e| e.warnings.clone())
            .unwrap_or_default()
    }

    /// Q-density: the construction density when known, otherwise read off the curvature.
    fn density(&self, cfg: &RunConfig) -> Result<Arc<QDensity>> {
        if let Some(d) = self.entry.as_ref().and_then(|e| e.density.clone()) {
            return Ok(d);
        }
        let reach = self.metric.curvature_reach();
        let support = reach.is_finite().then_some(reach);
        let decay = cfg.decay.or(Some(2.0 * self.metric.dimension() as f64));
        Ok(Arc::new(QDensity::from_metric(&self.metric, support, decay)?))
    }
}

pub fn params(cfg: &RunConfig) -> ZooParams {
    ZooParams {
        n: Some(cfg.n),
        alpha: cfg.alpha,
        lambda: cfg.lambda,
        width: cfg.width,
    }
}

fn radii(cfg: &RunConfig, r_max: f64) -> Result<Vec<f64>> {
    if !(r_max > cfg.r_min) {
        bail!("r_max = {r_max} must exceed r_min = {}", cfg.r_min);
    }
    Ok(NodeLayout::geometric(cfg.r_min, r_max, cfg.count).build()?)
}

/// Common JSON envelope: report body plus conventions, run settings and warnings.
fn envelope(mut body: Value, cfg: &RunConfig, command: &str, warnings: Vec<String>) -> Result<Value> {
    body["conventions"] = serde_json::to_value(Conventions::for_dimension(cfg.n)?)?;
    body["run"] = cfg.echo();
    body["run"]["command"] = command.into();
    body["warnings"] = warnings.into();
    Ok(body)
}

/// Files written by a command, in writing order.
pub type Written = Vec<PathBuf>;

fn emit(cfg: &RunConfig, files: &[(&str, String, bool)]) -> Result<Written> {
    ensure_dir(&cfg.out)?;
    let mut out = Vec::new();
    for (name, contents, wanted) in files {
        if *wanted {
            out.push(write_atomic(&cfg.out, name, contents)?);
        }
    }
    Ok(out)
}

fn flag_warning(name: &str, i: &CurvatureIntegral, warnings: &mut Vec<String>) {
    if i.flag == Flag::DivergesNumerically {
        warnings.push(format!("{name} diverges numerically (partial value {})", fmt_f64(i.value)));
    }
}

fn hypothesis_warnings(h: &HypothesisReport) -> Vec<String> {
    let mut w = Vec::new();
    flag_warning("integral of |Q|", &h.total_abs_q, &mut w);
    flag_warning("integral of (R-)^(n/2)", &h.total_rminus_pow, &mut w);
    if let Some(i) = &h.total_r_sq {
        flag_warning("integral of R^2", i, &mut w);
    }
    if let Some(i) = &h.sigma2_over {
        flag_warning("integral of sigma2", i, &mut w);
    }
    if !h.complete {
        w.push("metric is incomplete".into());
    }
    w
}

pub fn zoo_list() -> Result<String> {
    let mut out = String::new();
    for e in zoo::list()? {
        out.push_str(&e.summary());
        out.push('\n');
    }
    Ok(out)
}

pub fn zoo_show(name: &str, cfg: &RunConfig) -> Result<String> {
    let e = zoo::by_name(name, params(cfg))?;
    Ok(json_text(&e.to_json()))
}

pub fn pizzetti(k: usize) -> Result<String> {
    Ok(format!("{}\n", pizzetti_coefficients(k)?))
}

pub fn curvature(cfg: &RunConfig) -> Result<Written> {
    let s = Subject::load(cfg)?;
    let metric = match cfg.r_max {
        Some(r) if s.entry.is_some() => s.metric.with_nodes(default_nodes(r)?)?,
        _ => s.metric.clone(),
    };
    let rep = curvature_report(&metric, cfg.report_tol)?;
    let mut warnings = s.warnings();
    if !rep.identities_hold() {
        warnings.push("curvature identity residual exceeds the report tolerance".into());
    }
    let json = envelope(rep.to_json()?, cfg, "curvature", warnings)?;
    emit(
        cfg,
        &[
            ("curvature.csv", rep.to_csv(), cfg.format.csv()),
            ("curvature.json", json_text(&json), cfg.format.json()),
        ],
    )
}

pub fn normality(cfg: &RunConfig) -> Result<Written> {
    let s = Subject::load(cfg)?;
    let density = s.density(cfg)?;
    let last = cfg
        .probe_last
        .unwrap_or_else(|| cfg.r_max.unwrap_or_else(|| s.last_node()) / 2.0);
    let probes = dyadic_probes(cfg.probe_r0, last);
    if probes.is_empty() {
        bail!("no probe radii between {} and {last}", cfg.probe_r0);
    }
    let thresholds = NormalityThresholds {
        h_spread: cfg.verdict_tol,
        lap: cfg.verdict_tol,
        ..NormalityThresholds::default()
    };
    let rep = normality_residual(&s.metric, &density, &probes, thresholds)?;
    let mut body = rep.to_json()?;
    body["density"] = density.label().into();
    if cfg.samples > 0 {
        body["oracle"] = monte_carlo_check(cfg, &s, &density, &probes)?;
    }
    let json = envelope(body, cfg, "normality", s.warnings())?;
    emit(
        cfg,
        &[
            ("normality.csv", rep.to_csv(), cfg.format.csv()),
            ("normality.json", json_text(&json), cfg.format.json()),
        ],
    )
}

/// Monte-Carlo estimates of the potential at the probes, for ring-built entries.
fn monte_carlo_check(
    cfg: &RunConfig,
    s: &Subject,
    density: &QDensity,
    probes: &[f64],
) -> Result<Value> {
    let width = match &s.entry {
        Some(e) if matches!(e.name, "cone" | "nonnormal") => {
            e.params.get("width").copied().unwrap_or(0.1)
        }
        _ => return Ok(json!({ "skipped": "no sampler for this density" })),
    };
    let mut rows = Vec::new();
    for (i, &r) in probes.iter().enumerate() {
        let mc = monte_carlo_log_kernel(
            cfg.n,
            density.total(),
            r,
            cfg.samples,
            cfg.seed,
            i as u64,
            ring_sampler(1.0, width),
        )?;
        let v = log_potential(density, r)?;
        rows.push(json!({
            "r": r,
            "potential": v,
            "monte_carlo": mc.mean,
            "std_error": mc.std_error,
            "z": (v - mc.mean) / mc.std_error,
        }));
    }
    Ok(json!({ "seed": cfg.seed, "samples": cfg.samples, "probes": rows }))
}

/// Radius for the isoperimetric limit: 10⁶ for catalog metrics defined everywhere,
/// otherwise the last node.
fn deficit_radius(cfg: &RunConfig, s: &Subject) -> f64 {
    cfg.r_max.unwrap_or_else(|| {
        let last = s.last_node();
        if s.metric.curvature_reach().is_infinite() && last >= 1e3 {
            1e6
        } else {
            last.min(s.metric.curvature_reach())
        }
    })
}

pub fn deficit(cfg: &RunConfig) -> Result<Written> {
    let s = Subject::load(cfg)?;
    let r_max = deficit_radius(cfg, &s);
    let rep = deficit_check(&s.metric, r_max)?;
    let series = geometry_series(&s.metric, &radii(cfg, r_max)?)?;
    let mut warnings = s.warnings();
    warnings.extend(hypothesis_warnings(&rep.hypotheses));
    let json = envelope(rep.to_json()?, cfg, "deficit", warnings)?;
    emit(
        cfg,
        &[
            ("deficit.json", json_text(&json), cfg.format.json()),
            ("geometry.csv", series.to_csv(), cfg.format.csv()),
        ],
    )
}

pub fn isoperimetric(cfg: &RunConfig) -> Result<Written> {
    let s = Subject::load(cfg)?;
    let r_max = deficit_radius(cfg, &s);
    let series = geometry_series(&s.metric, &radii(cfg, r_max)?)?;
    let json = envelope(serde_json::to_value(&series)?, cfg, "isoperimetric", s.warnings())?;
    emit(
        cfg,
        &[
            ("isoperimetric.csv", series.to_csv(), cfg.format.csv()),
            ("isoperimetric.json", json_text(&json), cfg.format.json()),
        ],
    )
}

pub fn flux(cfg: &RunConfig) -> Result<Written> {
    let s = Subject::load(cfg)?;
    if s.metric.dimension() != 4 {
        bail!("flux is defined for n = 4 only");
    }
    let rho_max = cfg.r_max.unwrap_or_else(|| s.last_node());
    let points = divergence_flux(&s.metric, &radii(cfg, rho_max)?)?;
    let routes = route_consistency(&s.metric, rho_max)?;
    let mut csv = String::from("rho,flux\n");
    for p in &points {
        csv.push_str(&format!("{},{}\n", fmt_f64(p.rho), fmt_f64(p.flux)));
    }
    let body = json!({
        "n": 4,
        "label": s.metric.label(),
        "flux": points,
        "routes": routes,
    });
    let json = envelope(body, cfg, "flux", s.warnings())?;
    emit(
        cfg,
        &[
            ("flux.csv", csv, cfg.format.csv()),
            ("flux.json", json_text(&json), cfg.format.json()),
        ],
    )
}
