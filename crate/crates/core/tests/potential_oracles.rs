//! The one-dimensional log potential against independent integrations and closed forms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use qlab_core::constants::c_n;
use qlab_core::field::{radial_laplacian, NodeLayout, RadialProfile};
use qlab_core::potential::oracle::{
    gaussian_sampler, monte_carlo_log_kernel, planar_kernel_quadrature, ring_sampler,
};
use qlab_core::potential::{
    annulus_decay_series, log_potential, log_potential_gradient, loglog_slope, QDensity,
};

fn random_radii(seed: u64, count: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    (0..count).map(|_| rng.random_range(lo..hi)).collect()
}

#[test]
fn planar_reduction_matches_full_quadrature() {
    let p = QDensity::gaussian(2, 1.3, 0.8).unwrap();
    for r in random_radii(2024, 5, 0.05, 6.0) {
        let v = log_potential(&p, r).unwrap();
        let q = planar_kernel_quadrature(&p, r, 1e-12).unwrap();
        assert!((v - q).abs() < 1e-6, "r = {r}: {v} vs {q}");
    }
}

#[test]
fn four_dimensional_reduction_matches_monte_carlo() {
    let p = QDensity::gaussian(4, 2.0, 0.6).unwrap();
    for (i, r) in random_radii(7, 5, 0.1, 4.0).into_iter().enumerate() {
        let mc = monte_carlo_log_kernel(4, p.total(), r, 100_000, 7, i as u64, gaussian_sampler(0.6))
            .unwrap();
        let v = log_potential(&p, r).unwrap();
        assert!((v - mc.mean).abs() < 3.0 * mc.std_error, "r = {r}: {v} vs {mc:?}");
    }
}

#[test]
fn ring_reduction_matches_monte_carlo() {
    let c4 = c_n(4).unwrap();
    let p = QDensity::ring(4, 0.8 * c4, 1.0, 0.1).unwrap();
    for (i, r) in [0.5, 0.95, 1.05, 2.0, 10.0].into_iter().enumerate() {
        let mc = monte_carlo_log_kernel(4, p.total(), r, 100_000, 99, i as u64, ring_sampler(1.0, 0.1))
            .unwrap();
        let v = log_potential(&p, r).unwrap();
        assert!((v - mc.mean).abs() < 3.0 * mc.std_error, "r = {r}: {v} vs {mc:?}");
    }
}

/// Samples v on `[a, b]` and applies the five-point radial Laplacian.
fn discrete_laplacian(p: &QDensity, a: f64, b: f64) -> RadialProfile {
    let nodes = NodeLayout::uniform(a, b, 801);
    let v = RadialProfile::from_fn(nodes, |r| log_potential(p, r).unwrap()).unwrap();
    radial_laplacian(&v, p.dimension()).unwrap()
}

#[test]
fn potential_is_harmonic_off_the_support() {
    // n = 2: Δv = 0 beyond the ring
    let p = QDensity::ring(2, 0.4 * c_n(2).unwrap(), 1.0, 0.1).unwrap();
    let lap = discrete_laplacian(&p, 3.0, 6.0);
    for (r, l) in lap.nodes().iter().zip(lap.values()) {
        assert!(l.abs() < 1e-8, "r = {r}: {l}");
    }
    // n = 4 beyond the ring: Δv = Δ(−α log r) = −2α/r²
    let alpha = 0.4;
    let w = 0.05;
    let p = QDensity::ring(4, alpha * c_n(4).unwrap(), 1.0, w).unwrap();
    let lap = discrete_laplacian(&p, 3.0, 6.0);
    for (r, l) in lap.nodes().iter().zip(lap.values()) {
        let exact = -2.0 * alpha / (r * r);
        assert!((l - exact).abs() < 1e-8, "r = {r}: {l} vs {exact}");
    }
    // inside the hole log|x − y| is not harmonic in ℝ⁴ (Δ log|x−y| = 2|x−y|^{−2}, whose
    // sphere mean is max(r, s)^{−2}), so Δv is the constant −(2/c₄)·2π²∫P(s) s ds
    let (a, b) = (1.0 - 12.0 * w, 1.0 + 12.0 * w);
    let steps = 4000;
    let h = (b - a) / steps as f64;
    let simpson: f64 = (0..=steps)
        .map(|i| {
            let s = a + h * i as f64;
            let wgt = if i == 0 || i == steps { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            wgt * p.value(s) * s
        })
        .sum::<f64>()
        * h
        / 3.0;
    let inside = -2.0 / c_n(4).unwrap() * 2.0 * std::f64::consts::PI.powi(2) * simpson;
    let lap = discrete_laplacian(&p, 0.1, 0.3);
    for (r, l) in lap.nodes().iter().zip(lap.values()) {
        assert!((l - inside).abs() < 1e-8, "r = {r}: {l} vs {inside}");
    }
}

#[test]
fn logarithmic_slope_is_the_normalized_mass() {
    for n in [2, 4, 6] {
        let total = 0.3 * c_n(n).unwrap();
        for p in [
            QDensity::gaussian(n, total, 0.5).unwrap(),
            QDensity::ring(n, total, 1.0, 0.1).unwrap(),
        ] {
            // v = −α log r + C + O(r^{−2}): the ratio −v/log r still carries C/log r, so the
            // slope is read from two radii
            let (r0, r1): (f64, f64) = (1e3, 1e6);
            let slope =
                -(log_potential(&p, r1).unwrap() - log_potential(&p, r0).unwrap()) / (r1 / r0).ln();
            assert!((slope - 0.3).abs() < 1e-6, "n = {n}, {}: {slope}", p.label());
            let d = -r1 * log_potential_gradient(&p, r1).unwrap();
            assert!((d - 0.3).abs() < 1e-9, "n = {n}: {d}");
        }
    }
}

fn annulus_slope(p: &QDensity) -> f64 {
    let radii: Vec<f64> = (0..=12).map(|i| 1e2 * 10f64.powf(i as f64 / 4.0)).collect();
    let series = annulus_decay_series(p, &radii).unwrap();
    let pts: Vec<(f64, f64)> = series.iter().map(|a| (a.r, a.grad_v_sq_avg)).collect();
    loglog_slope(&pts).unwrap()
}

#[test]
fn gradient_energy_decays_like_inverse_square() {
    let c4 = c_n(4).unwrap();
    let g = annulus_slope(&QDensity::gaussian(4, 0.5 * c4, 0.7).unwrap());
    assert!((g + 2.0).abs() < 0.05, "gaussian slope {g}");
    let r = annulus_slope(&QDensity::ring(4, 0.5 * c4, 1.0, 0.1).unwrap());
    assert!((r + 2.0).abs() < 0.1, "ring slope {r}");
}

#[test]
fn planar_ring_gradient_energy_closed_form() {
    // n = 2 beyond the support: v′ = −(T/c₂)/s, and ⨍_{B_{2r}∖B_r} s^{−2} = 2 log 2/(3r²)
    let t = 0.7;
    let p = QDensity::ring(2, t, 1.0, 0.1).unwrap();
    let k = t / c_n(2).unwrap();
    for a in annulus_decay_series(&p, &[3.0, 10.0, 1e3]).unwrap() {
        let exact = k * k * 2.0 * 2f64.ln() / (3.0 * a.r * a.r);
        assert!((a.grad_v_sq_avg - exact).abs() < 1e-9 * exact, "{a:?}");
        assert!(a.lap_v_avg.abs() < 1e-12 / (a.r * a.r));
    }
}

#[test]
fn zero_density_gives_zero_potential() {
    let p = QDensity::zero(4).unwrap();
    for r in [0.0, 1.0, 1e5] {
        assert_eq!(log_potential(&p, r).unwrap(), 0.0);
    }
    for a in annulus_decay_series(&p, &[1.0, 10.0]).unwrap() {
        assert_eq!(a.grad_v_sq_avg, 0.0);
        assert_eq!(a.lap_v_avg, 0.0);
    }
}
