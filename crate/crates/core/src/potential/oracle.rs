//! Independent evaluations of the full log-kernel integral, used to validate the
//! one-dimensional reduction behind [`super::log_potential`].
//!
//! Neither route uses the sphere-mean identity: the planar oracle integrates
//! `log(|y|/|x−y|) P(|y|)` over ℝ² in polar coordinates, the four-dimensional one samples
//! `y` from `P/total` and averages the kernel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::QDensity;
use crate::constants::c_n;
use crate::error::{Error, Result};
use crate::quadrature::{adaptive_with_breaks, Tolerance};

/// (1/c₂) ∫_{ℝ²} log(|y|/|x−y|) P(|y|) dy at x = (r, 0), by iterated adaptive quadrature.
///
/// The angular integral is split at θ = 0 where the kernel is log-singular for |y| = r;
/// the radial one is split at s = r and at the density's breakpoints.
pub fn planar_kernel_quadrature(p: &QDensity, r: f64, rel: f64) -> Result<f64> {
    if p.dimension() != 2 {
        return Err(Error::UnsupportedDimension {
            op: "planar_kernel_quadrature",
            n: p.dimension(),
        });
    }
    let support = p.support().ok_or_else(|| {
        Error::Invalid("planar oracle needs a compactly supported density".into())
    })?;
    let tol = Tolerance {
        abs: 1e-300,
        rel,
        max_intervals: 4000,
    };
    let inner = |s: f64| -> f64 {
        // ∫_0^{2π} log(s/|x−y|) dθ = 2∫_0^π [log s − ½ log(r² + s² − 2rs cos θ)] dθ
        let f = |t: f64| {
            let d2 = (r - s).powi(2) + 4.0 * r * s * (0.5 * t).sin().powi(2);
            s.ln() - 0.5 * d2.ln()
        };
        let pi = std::f64::consts::PI;
        2.0 * adaptive_with_breaks(f, &[0.0, 1e-3, 0.1, pi], tol).value
    };
    let mut breaks = vec![0.0];
    breaks.extend(p.breakpoints().iter().copied().filter(|&b| b > 0.0 && b < support));
    if r > 0.0 && r < support {
        breaks.push(r);
    }
    breaks.push(support);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let outer = adaptive_with_breaks(|s| s * p.value(s) * inner(s), &breaks, tol);
    Ok(outer.value / c_n(2)?)
}

/// Monte-Carlo estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McEstimate {
    pub r: f64,
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

/// (total/c_n)·E[log(|y|/|x−y|)] for `y` drawn by `sample`, at x = (r, 0, …, 0).
///
/// Every radius gets its own ChaCha stream (`stream` index) under the common seed, so
/// estimates are reproducible and independent of evaluation order.
pub fn monte_carlo_log_kernel(
    n: usize,
    total: f64,
    r: f64,
    samples: usize,
    seed: u64,
    stream: u64,
    mut sample: impl FnMut(&mut ChaCha20Rng, &mut [f64]),
) -> Result<McEstimate> {
    if samples < 2 {
        return Err(Error::Domain("Monte Carlo needs at least two samples".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut y = vec![0.0; n];
    let (mut mean, mut m2) = (0.0, 0.0);
    for i in 0..samples {
        sample(&mut rng, &mut y);
        let ny2: f64 = y.iter().map(|v| v * v).sum();
        let dx2: f64 = (y[0] - r).powi(2) + y[1..].iter().map(|v| v * v).sum::<f64>();
        let k = 0.5 * (ny2.ln() - dx2.ln());
        // Welford update
        let delta = k - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (k - mean);
    }
    let var = m2 / (samples - 1) as f64;
    let scale = total / c_n(n)?;
    Ok(McEstimate {
        r,
        mean: scale * mean,
        std_error: scale.abs() * (var / samples as f64).sqrt(),
        samples,
    })
}

/// Sampler for the centred Gaussian density of the given width: y ~ N(0, w² I).
pub fn gaussian_sampler(width: f64) -> impl FnMut(&mut ChaCha20Rng, &mut [f64]) {
    move |rng, y| {
        for v in y.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *v = width * z;
        }
    }
}

/// Sampler for the Gaussian ring `∝ s^{n−1} e^{−(s−c)²/(2w²)}` on `|s − c| ≤ 12w`, `s ≥ 0`.
///
/// The radius is drawn from the truncated normal and accepted with probability
/// `(s/s_max)^{n−1}`; the direction is a normalized Gaussian vector.
pub fn ring_sampler(center: f64, width: f64) -> impl FnMut(&mut ChaCha20Rng, &mut [f64]) {
    let (lo, hi) = ((center - 12.0 * width).max(0.0), center + 12.0 * width);
    move |rng, y| {
        let pw = y.len() as i32 - 1;
        let s = loop {
            let z: f64 = rng.sample(StandardNormal);
            let s = center + width * z;
            if s < lo || s > hi {
                continue;
            }
            if rng.random::<f64>() <= (s / hi).powi(pw) {
                break s;
            }
        };
        let mut norm = 0.0;
        for v in y.iter_mut() {
            *v = rng.sample(StandardNormal);
            norm += *v * *v;
        }
        let scale = s / norm.sqrt();
        for v in y.iter_mut() {
            *v *= scale;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monte_carlo_is_reproducible() {
        let run = || {
            monte_carlo_log_kernel(4, 1.0, 2.0, 2000, 7, 3, gaussian_sampler(1.0)).unwrap()
        };
        assert_eq!(run(), run());
        let other = monte_carlo_log_kernel(4, 1.0, 2.0, 2000, 7, 4, gaussian_sampler(1.0)).unwrap();
        assert_ne!(run().mean, other.mean);
    }

    #[test]
    fn ring_potential_matches_monte_carlo() {
        let c4 = c_n(4).unwrap();
        let p = QDensity::ring(4, 0.5 * c4, 1.0, 0.1).unwrap();
        for (i, r) in [0.3, 1.0, 2.5].into_iter().enumerate() {
            let mc = monte_carlo_log_kernel(4, p.total(), r, 40_000, 11, i as u64, ring_sampler(1.0, 0.1))
                .unwrap();
            let v = super::super::log_potential(&p, r).unwrap();
            assert!((v - mc.mean).abs() < 4.0 * mc.std_error, "r={r}: {v} vs {mc:?}");
        }
    }
}
