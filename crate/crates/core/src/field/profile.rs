use std::fmt;
use std::fmt::Write as _;
use std::sync::Arc;

use super::{LogTail, RadialFunction};
use crate::error::{Error, Result};
use crate::jet::Jet;

/// A scalar function of radius sampled on strictly increasing nodes.
///
/// Between nodes a sampled profile is the piecewise-linear interpolant of its values, so
/// every integral of it is a non-negative combination of node values. A profile may be
/// backed by a closed-form [`RadialFunction`], in which case off-node evaluation uses the
/// backing instead. Beyond the last node an optional [`LogTail`] takes over.
#[derive(Clone)]
pub struct RadialProfile {
    nodes: Vec<f64>,
    values: Vec<f64>,
    tail: Option<LogTail>,
    backing: Option<Arc<dyn RadialFunction>>,
}

impl fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialProfile")
            .field("len", &self.nodes.len())
            .field("range", &(self.nodes.first(), self.nodes.last()))
            .field("tail", &self.tail)
            .field("backed", &self.backing.is_some())
            .finish()
    }
}

fn validate(nodes: &[f64], values: &[f64]) -> Result<()> {
    if nodes.len() != values.len() {
        return Err(Error::Invalid(format!(
            "{} nodes but {} values",
            nodes.len(),
            values.len()
        )));
    }
    if nodes.is_empty() {
        return Err(Error::DegenerateGrid { needed: 1, got: 0 });
    }
    if !(nodes[0] >= 0.0) {
        return Err(Error::Invalid(format!("first node {} is negative", nodes[0])));
    }
    if let Some(w) = nodes.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::Invalid(format!(
            "nodes not strictly increasing at {} -> {}",
            w[0], w[1]
        )));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Invalid(format!(
            "non-finite value {} at r = {}",
            values[i], nodes[i]
        )));
    }
    Ok(())
}

impl RadialProfile {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        validate(&nodes, &values)?;
        Ok(RadialProfile {
            nodes,
            values,
            tail: None,
            backing: None,
        })
    }

    pub fn from_fn(nodes: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = nodes.iter().map(|&r| f(r)).collect();
        Self::new(nodes, values)
    }

    /// Samples a closed-form function and keeps it as the backing.
    pub fn sample(f: Arc<dyn RadialFunction>, nodes: Vec<f64>) -> Result<Self> {
        let values: Vec<f64> = nodes.iter().map(|&r| f.value(r)).collect();
        validate(&nodes, &values)?;
        Ok(RadialProfile {
            nodes,
            values,
            tail: f.log_tail(),
            backing: Some(f),
        })
    }

    /// Attaches a log tail starting at the last node.
    ///
    /// The sampled and tail values at `r_max` must agree within `tol` (relative to
    /// `max(1, |value|)`).
    pub fn with_tail(mut self, beta: f64, c: f64, tol: f64) -> Result<Self> {
        let r_max = *self.nodes.last().expect("validated non-empty");
        if r_max <= 0.0 {
            return Err(Error::Invalid("log tail needs r_max > 0".into()));
        }
        let tail = LogTail { beta, c, r_max };
        let last = *self.values.last().expect("validated non-empty");
        let gap = (tail.value(r_max) - last).abs();
        if gap > tol * last.abs().max(1.0) {
            return Err(Error::Invalid(format!(
                "tail value {} at r_max = {r_max} disagrees with sample {last} (gap {gap:e})",
                tail.value(r_max)
            )));
        }
        self.tail = Some(tail);
        Ok(self)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn tail(&self) -> Option<LogTail> {
        self.tail
    }

    pub fn backing(&self) -> Option<&Arc<dyn RadialFunction>> {
        self.backing.as_ref()
    }

    pub fn r_max(&self) -> f64 {
        *self.nodes.last().expect("validated non-empty")
    }

    /// Sub-profile on node indices `start..end`; drops the tail unless `end` is the last node.
    pub fn slice(&self, start: usize, end: usize) -> RadialProfile {
        RadialProfile {
            nodes: self.nodes[start..end].to_vec(),
            values: self.values[start..end].to_vec(),
            tail: if end == self.nodes.len() {
                self.tail
            } else {
                None
            },
            backing: self.backing.clone(),
        }
    }

    /// Same nodes, new values, no tail or backing.
    pub fn with_values(&self, values: Vec<f64>) -> Result<RadialProfile> {
        RadialProfile::new(self.nodes.clone(), values)
    }

    pub fn eval(&self, r: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        if !(r >= lo && r <= hi) {
            return Err(Error::Coverage { r, lo, hi });
        }
        Ok(self.value(r))
    }

    fn interpolate(&self, r: f64) -> (f64, f64) {
        let n = self.nodes.len();
        if n == 1 {
            return (self.values[0], 0.0);
        }
        let i = match self.nodes.partition_point(|&x| x <= r) {
            0 => 0,
            k if k >= n => n - 2,
            k => k - 1,
        };
        let (x0, x1) = (self.nodes[i], self.nodes[i + 1]);
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let slope = (y1 - y0) / (x1 - x0);
        (y0 + slope * (r - x0), slope)
    }

    /// Two-column CSV (`r,value`) with 17 significant digits and an optional tail comment.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,value\n");
        for (r, v) in self.nodes.iter().zip(&self.values) {
            let _ = writeln!(out, "{},{}", fmt_f64(*r), fmt_f64(*v));
        }
        if let Some(t) = self.tail {
            let _ = writeln!(
                out,
                "# tail: beta={} c={} rmax={}",
                fmt_f64(t.beta),
                fmt_f64(t.c),
                fmt_f64(t.r_max)
            );
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<RadialProfile> {
        let mut nodes = Vec::new();
        let mut values = Vec::new();
        let mut tail = None;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next() {
            Some(h) if h.trim().replace(' ', "") == "r,value" => {}
            other => {
                return Err(Error::Parse(format!(
                    "expected header `r,value`, found {other:?}"
                )))
            }
        }
        for line in lines {
            let line = line.trim();
            if let Some(rest) = line.strip_prefix("# tail:") {
                let mut beta = None;
                let mut c = None;
                let mut r_max = None;
                for kv in rest.split_whitespace() {
                    let (k, v) = kv
                        .split_once('=')
                        .ok_or_else(|| Error::Parse(format!("bad tail field `{kv}`")))?;
                    let v: f64 = v
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad tail number `{v}`")))?;
                    match k {
                        "beta" => beta = Some(v),
                        "c" => c = Some(v),
                        "rmax" => r_max = Some(v),
                        _ => return Err(Error::Parse(format!("unknown tail key `{k}`"))),
                    }
                }
                match (beta, c, r_max) {
                    (Some(beta), Some(c), Some(r_max)) => tail = Some((beta, c, r_max)),
                    _ => return Err(Error::Parse("incomplete tail line".into())),
                }
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("expected `r,value`, found `{line}`")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad number `{s}`")))
            };
            nodes.push(parse(a)?);
            values.push(parse(b)?);
        }
        let profile = RadialProfile::new(nodes, values)?;
        match tail {
            None => Ok(profile),
            Some((beta, c, r_max)) => {
                if (r_max - profile.r_max()).abs() > 1e-12 * r_max.abs().max(1.0) {
                    return Err(Error::Invalid(format!(
                        "tail rmax {r_max} does not match last node {}",
                        profile.r_max()
                    )));
                }
                profile.with_tail(beta, c, 1e-8)
            }
        }
    }
}

/// Shortest round-trip float formatting padded to 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl RadialFunction for RadialProfile {
    fn jet(&self, r: f64, order: usize) -> Jet {
        if let Some(b) = &self.backing {
            return b.jet(r, order);
        }
        if let Some(t) = self.tail {
            if r > t.r_max {
                return t.jet(r, order);
            }
        }
        let (v, slope) = self.interpolate(r);
        if order == 0 {
            Jet::constant(v, r, 0)
        } else {
            Jet::from_derivatives(r, &[v, slope])
        }
    }

    fn domain(&self) -> (f64, f64) {
        if let Some(b) = &self.backing {
            return b.domain();
        }
        let hi = if self.tail.is_some() {
            f64::INFINITY
        } else {
            self.r_max()
        };
        (self.nodes[0], hi)
    }

    fn log_tail(&self) -> Option<LogTail> {
        self.tail
    }

    fn breakpoints(&self) -> Vec<f64> {
        match &self.backing {
            Some(b) => b.breakpoints(),
            None => self.nodes.clone(),
        }
    }
}

/// Radial node layout: log-spaced nodes on `[r_min, r_max]` plus a uniform patch on `[0, r_min)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeLayout {
    pub r_min: f64,
    pub r_max: f64,
    pub count: usize,
    /// Include `r = 0` and a uniform patch matching the first geometric spacing.
    pub origin_patch: bool,
}

impl Default for NodeLayout {
    fn default() -> Self {
        NodeLayout {
            r_min: 1e-4,
            r_max: 1e6,
            count: 4000,
            origin_patch: true,
        }
    }
}

impl NodeLayout {
    pub fn geometric(r_min: f64, r_max: f64, count: usize) -> Self {
        NodeLayout {
            r_min,
            r_max,
            count,
            origin_patch: false,
        }
    }

    pub fn build(&self) -> Result<Vec<f64>> {
        if !(self.r_min > 0.0 && self.r_max > self.r_min) {
            return Err(Error::Invalid(format!(
                "bad node range [{}, {}]",
                self.r_min, self.r_max
            )));
        }
        if self.count < 2 {
            return Err(Error::DegenerateGrid {
                needed: 2,
                got: self.count,
            });
        }
        let ratio = (self.r_max / self.r_min).ln() / (self.count - 1) as f64;
        let geo: Vec<f64> = (0..self.count)
            .map(|i| {
                if i == self.count - 1 {
                    self.r_max
                } else {
                    self.r_min * (ratio * i as f64).exp()
                }
            })
            .collect();
        if !self.origin_patch {
            return Ok(geo);
        }
        let h = geo[1] - geo[0];
        let m = (self.r_min / h).ceil() as usize;
        let h = self.r_min / m as f64;
        let mut nodes: Vec<f64> = (0..m).map(|i| i as f64 * h).collect();
        nodes.extend(geo);
        Ok(nodes)
    }

    /// `count` equally spaced nodes on `[a, b]`.
    pub fn uniform(a: f64, b: f64, count: usize) -> Vec<f64> {
        let h = (b - a) / (count - 1) as f64;
        (0..count)
            .map(|i| if i == count - 1 { b } else { a + h * i as f64 })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_nodes_and_values() {
        assert!(RadialProfile::new(vec![0.0, 1.0, 1.0], vec![0.0; 3]).is_err());
        assert!(RadialProfile::new(vec![-1.0, 1.0], vec![0.0; 2]).is_err());
        assert!(RadialProfile::new(vec![0.0, 1.0], vec![0.0, f64::NAN]).is_err());
        assert!(RadialProfile::new(vec![0.0, 1.0], vec![0.0]).is_err());
    }

    #[test]
    fn tail_continuity_is_checked() {
        let nodes = NodeLayout::uniform(1.0, 10.0, 10);
        let p = RadialProfile::from_fn(nodes, |r| -0.5 * r.ln() + 2.0).unwrap();
        let ok = p.clone().with_tail(-0.5, 2.0, 1e-12).unwrap();
        assert!((ok.eval(100.0).unwrap() - (-0.5 * 100f64.ln() + 2.0)).abs() < 1e-14);
        assert!(p.with_tail(-0.5, 2.1, 1e-6).is_err());
    }

    #[test]
    fn coverage_error_outside_range() {
        let p = RadialProfile::from_fn(NodeLayout::uniform(1.0, 2.0, 5), |r| r).unwrap();
        assert!(matches!(p.eval(3.0), Err(Error::Coverage { .. })));
        assert!((p.eval(1.5).unwrap() - 1.5).abs() < 1e-15);
    }

    #[test]
    fn csv_roundtrip_with_tail() {
        let p = RadialProfile::from_fn(NodeLayout::uniform(1.0, 4.0, 7), |r| 3.0 - r.ln())
            .unwrap()
            .with_tail(-1.0, 3.0, 1e-12)
            .unwrap();
        let text = p.to_csv();
        assert!(text.starts_with("r,value\n"));
        assert!(text.contains("# tail: beta="));
        let q = RadialProfile::from_csv(&text).unwrap();
        assert_eq!(q.nodes(), p.nodes());
        assert_eq!(q.values(), p.values());
        assert_eq!(q.tail(), p.tail());
    }

    #[test]
    fn layout_has_origin_patch() {
        let nodes = NodeLayout {
            count: 200,
            r_max: 10.0,
            ..Default::default()
        }
        .build()
        .unwrap();
        assert_eq!(nodes[0], 0.0);
        assert!(nodes.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(*nodes.last().unwrap(), 10.0);
    }
}
