//! Run configuration: a flat `key = value` file with `[section]` headers, overridden by flags.
//!
//! Keys are addressed as `section.key`; keys before the first header live in the root
//! section and may be written either bare or fully qualified (`metric.name = cone`).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};

/// Output formats for file-producing commands.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl Format {
    pub fn csv(self) -> bool {
        matches!(self, Format::Csv | Format::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, Format::Json | Format::Both)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Both => "both",
        }
    }
}

impl FromStr for Format {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "both" => Ok(Format::Both),
            other => bail!("format must be csv, json or both, got '{other}'"),
        }
    }
}

/// Where the conformal factor comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum MetricSource {
    Zoo(String),
    /// Two-column `r,u` profile.
    Profile(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub n: usize,
    pub metric: MetricSource,
    pub alpha: Option<f64>,
    pub lambda: Option<f64>,
    pub width: Option<f64>,
    /// Decay exponent assumed for Q-densities read off a metric.
    pub decay: Option<f64>,
    pub r_min: f64,
    pub r_max: Option<f64>,
    pub count: usize,
    pub report_tol: f64,
    pub verdict_tol: f64,
    pub probe_r0: f64,
    pub probe_last: Option<f64>,
    pub seed: u64,
    pub samples: usize,
    pub out: PathBuf,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 4,
            metric: MetricSource::Zoo("flat".into()),
            alpha: None,
            lambda: None,
            width: None,
            decay: None,
            r_min: 1.0,
            r_max: None,
            count: 61,
            report_tol: qlab_core::curvature::REPORT_TOLERANCE,
            verdict_tol: 1e-4,
            probe_r0: 1.0,
            probe_last: None,
            seed: 0,
            samples: 0,
            out: PathBuf::from("qlab-out"),
            format: Format::Both,
        }
    }
}

/// Flat `section.key → value` map read from a config file.
pub fn parse_ini(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| anyhow!("line {}: unterminated section header", i + 1))?;
            section = name.trim().to_string();
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected key = value", i + 1))?;
        let k = k.trim();
        if k.is_empty() {
            bail!("line {}: empty key", i + 1);
        }
        let key = if section.is_empty() || k.contains('.') {
            k.to_string()
        } else {
            format!("{section}.{k}")
        };
        let v = v.trim().trim_matches('"').to_string();
        if out.insert(key.clone(), v).is_some() {
            bail!("line {}: duplicate key '{key}'", i + 1);
        }
    }
    Ok(out)
}

/// Flag values that override config keys; `None` leaves the key alone.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub metric: Option<String>,
    pub n: Option<usize>,
    pub r_max: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub alpha: Option<f64>,
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    v.parse::<T>()
        .map_err(|e| anyhow!("bad value '{v}' for {key}: {e}"))
}

/// Accepted keys: bare root keys map to their qualified form.
const KEYS: [(&str, &str); 18] = [
    ("metric.name", "metric"),
    ("metric.n", "n"),
    ("metric.alpha", "alpha"),
    ("metric.lambda", "lambda"),
    ("metric.width", "width"),
    ("metric.profile", "profile"),
    ("metric.decay", "decay"),
    ("nodes.r_min", "r_min"),
    ("nodes.r_max", "rmax"),
    ("nodes.count", "count"),
    ("tolerance.report", "report_tol"),
    ("tolerance.verdict", "verdict_tol"),
    ("probes.r0", "probe_r0"),
    ("probes.r_last", "probe_last"),
    ("monte_carlo.seed", "seed"),
    ("monte_carlo.samples", "samples"),
    ("output.dir", "out"),
    ("output.format", "format"),
];

fn qualify(key: &str) -> Result<&'static str> {
    KEYS.iter()
        .find(|(q, bare)| *q == key || *bare == key)
        .map(|(q, _)| *q)
        .ok_or_else(|| anyhow!("unknown config key '{key}'"))
}

impl RunConfig {
    /// Defaults, then the config file (if any), then flags; validated at the end.
    pub fn load(path: Option<&Path>, flags: &Overrides) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut base = PathBuf::from(".");
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            base = path.parent().map(Path::to_path_buf).unwrap_or(base);
            for (k, v) in parse_ini(&text)? {
                cfg.set(qualify(&k)?, &v, &base)?;
            }
        }
        if let Some(m) = &flags.metric {
            cfg.set("metric.name", m, Path::new("."))?;
        }
        if let Some(n) = flags.n {
            cfg.n = n;
        }
        if let Some(r) = flags.r_max {
            cfg.r_max = Some(r);
        }
        if let Some(s) = flags.seed {
            cfg.seed = s;
        }
        if let Some(o) = &flags.out {
            cfg.out = o.clone();
        }
        if let Some(f) = flags.format {
            cfg.format = f;
        }
        if let Some(a) = flags.alpha {
            cfg.alpha = Some(a);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, v: &str, base: &Path) -> Result<()> {
        match key {
            "metric.name" => {
                // a name containing a path separator or ending in .csv is a profile file
                self.metric = if v.ends_with(".csv") || v.contains('/') {
                    MetricSource::Profile(base.join(v))
                } else {
                    MetricSource::Zoo(v.to_string())
                }
            }
            "metric.profile" => self.metric = MetricSource::Profile(base.join(v)),
            "metric.n" => self.n = parse(key, v)?,
            "metric.alpha" => self.alpha = Some(parse(key, v)?),
            "metric.lambda" => self.lambda = Some(parse(key, v)?),
            "metric.width" => self.width = Some(parse(key, v)?),
            "metric.decay" => self.decay = Some(parse(key, v)?),
            "nodes.r_min" => self.r_min = parse(key, v)?,
            "nodes.r_max" => self.r_max = Some(parse(key, v)?),
            "nodes.count" => self.count = parse(key, v)?,
            "tolerance.report" => self.report_tol = parse(key, v)?,
            "tolerance.verdict" => self.verdict_tol = parse(key, v)?,
            "probes.r0" => self.probe_r0 = parse(key, v)?,
            "probes.r_last" => self.probe_last = Some(parse(key, v)?),
            "monte_carlo.seed" => self.seed = parse(key, v)?,
            "monte_carlo.samples" => self.samples = parse(key, v)?,
            "output.dir" => self.out = base.join(v),
            "output.format" => self.format = parse(key, v)?,
            other => bail!("unknown config key '{other}'"),
        }
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 || self.n % 2 != 0 {
            bail!("n must be even and at least 2, got {}", self.n);
        }
        for (name, t) in [
            ("tolerance.report", self.report_tol),
            ("tolerance.verdict", self.verdict_tol),
        ] {
            if !(t > 0.0 && t.is_finite()) {
                bail!("{name} must be positive, got {t}");
            }
        }
        if !(self.r_min > 0.0) {
            bail!("nodes.r_min must be positive, got {}", self.r_min);
        }
        if let Some(r) = self.r_max {
            if !(r > 0.0 && r.is_finite()) {
                bail!("r_max must be positive and finite, got {r}");
            }
        }
        if self.count < 2 {
            bail!("nodes.count must be at least 2, got {}", self.count);
        }
        if !(self.probe_r0 > 0.0) {
            bail!("probes.r0 must be positive, got {}", self.probe_r0);
        }
        if let MetricSource::Profile(p) = &self.metric {
            if !p.is_file() {
                bail!("profile {} does not exist", p.display());
            }
        }
        Ok(())
    }

    /// Label-free echo of the settings that determine a command's output.
    pub fn echo(&self) -> serde_json::Value {
        let metric = match &self.metric {
            MetricSource::Zoo(name) => name.clone(),
            MetricSource::Profile(p) => p
                .file_name()
                .map(|f| f.to_string_lossy().into_owned())
                .unwrap_or_default(),
        };
        serde_json::json!({
            "n": self.n,
            "metric": metric,
            "alpha": self.alpha,
            "lambda": self.lambda,
            "width": self.width,
            "r_min": self.r_min,
            "r_max": self.r_max,
            "count": self.count,
            "report_tolerance": self.report_tol,
            "verdict_tolerance": self.verdict_tol,
            "seed": self.seed,
            "samples": self.samples,
            "format": self.format.as_str(),
        })
    }
}
