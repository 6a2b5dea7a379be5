//! Exact identities checked against hand-derived closed forms.

use std::f64::consts::PI;
use std::sync::Arc;

use qlab_core::constants::c_n;
use qlab_core::curvature::{curvature_report, ConformalMetric, REPORT_TOLERANCE};
use qlab_core::field::{AnalyticField, JetFn, NodeLayout, RadialFunction, RadialProfile};
use qlab_core::geometry::{
    annulus_scalar_bound, divergence_flux, geometry_series, route_consistency, total_q, Flag,
};
use qlab_core::potential::{pizzetti_coefficients, spherical_mean_expansion_check, Rational};
use qlab_core::zoo::{zoo_cone, zoo_flat, zoo_sphere};

/// Δ²u for u = log(2/(1 + r²)) in ℝ⁴, differentiated by hand: 96/(1 + r²)⁴.
fn sphere_bilaplacian(r: f64) -> f64 {
    96.0 / (1.0 + r * r).powi(4)
}

#[test]
fn sphere_bilaplacian_matches_curvature_equation_on_2001_nodes() {
    let e = zoo_sphere(4, 1.0).unwrap();
    let nodes = NodeLayout::uniform(0.0, 10.0, 2001);
    let mut worst: f64 = 0.0;
    for &r in &nodes {
        let p = e.metric.point(r).unwrap();
        let bilap = 2.0 * p.q_density;
        let rhs = 6.0 * (4.0 * e.metric.u(r).unwrap()).exp();
        worst = worst.max((bilap - rhs).abs() / rhs.max(1.0));
        // the closed form is an independent route to the same quantity
        assert!((bilap - sphere_bilaplacian(r)).abs() <= 1e-12 * sphere_bilaplacian(r).max(1e-3));
    }
    assert!(worst < 1e-6, "{worst}");
}

#[test]
fn sampled_route_agrees_with_closed_form_where_stencils_resolve() {
    // finite differences of a sampled profile: fourth derivatives lose ~ε/h⁴ to rounding,
    // so this route is compared at a looser level
    let nodes = NodeLayout::uniform(0.0, 10.0, 401);
    let u = RadialProfile::from_fn(nodes, |r| (2.0 / (1.0 + r * r)).ln()).unwrap();
    let m = ConformalMetric::sampled(4, u, "sampled sphere").unwrap();
    let rep = curvature_report(&m, REPORT_TOLERANCE).unwrap();
    for (i, &r) in rep.nodes.iter().enumerate() {
        if r < 9.0 {
            let bilap = 2.0 * rep.q[i] * (4.0 * (2.0 / (1.0 + r * r)).ln()).exp();
            let exact = sphere_bilaplacian(r);
            assert!((bilap - exact).abs() < 1e-4 * exact.max(1.0), "r = {r}: {bilap} vs {exact}");
        }
    }
}

#[test]
fn gauss_bonnet_on_the_sphere() {
    for n in [2, 4] {
        let t = total_q(&zoo_sphere(n, 1.0).unwrap().metric).unwrap();
        assert!((t.value - 2.0).abs() < 1e-4, "n = {n}: {t:?}");
    }
    // scale invariance
    let t = total_q(&zoo_sphere(4, 3.5).unwrap().metric).unwrap();
    assert!((t.value - 2.0).abs() < 1e-4);
    assert!((c_n(4).unwrap() - 4.0 * PI * PI).abs() < 1e-12);
}

#[test]
fn sphere_volume_is_that_of_the_round_sphere() {
    // Vol(S⁴) = 8π²/3; the ball of radius 1 is a hemisphere
    let m = zoo_sphere(4, 1.0).unwrap().metric;
    let g = geometry_series(&m, &[1.0, 1e4]).unwrap();
    assert!((g.volume[0] - 4.0 * PI * PI / 3.0).abs() < 1e-10);
    assert!((g.volume[1] - 8.0 * PI * PI / 3.0).abs() < 1e-9);
    // the equator is a unit 3-sphere: area 2π²
    assert!((g.area[0] - 2.0 * PI * PI).abs() < 1e-12);
}

#[test]
fn flat_isoperimetric_ratio_is_one() {
    for n in [2, 4, 6] {
        let m = zoo_flat(n).unwrap().metric;
        let g = geometry_series(&m, &[0.5, 3.0, 1e5]).unwrap();
        for i in &g.iso_ratio {
            assert!((i - 1.0).abs() < 1e-12, "n = {n}: {i}");
        }
    }
}

#[test]
fn volume_derivative_matches_density() {
    let m = zoo_cone(4, 0.5, 0.1).unwrap().metric;
    let h = 1e-4;
    for r in [0.7, 1.0, 3.0] {
        let g = geometry_series(&m, &[r - h, r + h]).unwrap();
        let dv = (g.volume[1] - g.volume[0]) / (2.0 * h);
        let exact = 2.0 * PI * PI * r.powi(3) * (4.0 * m.u(r).unwrap()).exp();
        assert!((dv - exact).abs() < 1e-6 * exact, "r = {r}");
        assert!(g.volume[1] > g.volume[0]);
    }
}

#[test]
fn sphere_flux_vanishes_and_routes_agree() {
    let m = zoo_sphere(4, 1.0).unwrap().metric;
    let radii: Vec<f64> = (0..30).map(|i| 0.1 * 1.5f64.powi(i)).collect();
    for f in divergence_flux(&m, &radii).unwrap() {
        assert!(f.flux.abs() <= 1e-12, "{f:?}");
    }
    let routes = route_consistency(&m, 1e4).unwrap();
    assert!(routes.applicable);
    assert!(routes.difference < 1e-3 * (1.0 + routes.total_abs_q));
}

/// F(ρ) for the cone far out: u = −α log r + C + O(r^{−2}) gives S ≈ (12α − 6α²)/r² and
/// F = 2π²ρ³(S′ − 2u′S) → 4π²(12α − 6α²)(α − 1).
#[test]
fn cone_flux_tends_to_closed_form_constant() {
    for alpha in [0.2, 0.5, 0.8] {
        let m = zoo_cone(4, alpha, 0.1).unwrap().metric;
        let f = divergence_flux(&m, &[1e2, 1e4]).unwrap();
        let limit = 4.0 * PI * PI * (12.0 * alpha - 6.0 * alpha * alpha) * (alpha - 1.0);
        for (p, rel) in f.iter().zip([1e-3, 1e-7]) {
            assert!((p.flux - limit).abs() < rel * limit.abs(), "{alpha}: {p:?}");
        }
        // and the two routes differ by −F∞/(12c₄)
        let routes = route_consistency(&m, 1e4).unwrap();
        assert!(!routes.applicable);
        let gap = routes.q_over_cn - routes.sigma2_over;
        assert!((gap + limit / (12.0 * c_n(4).unwrap())).abs() < 1e-9, "{gap}");
    }
}

#[test]
fn cone_curvature_square_diverges() {
    let rep = qlab_core::geometry::hypothesis_report(&zoo_cone(4, 0.5, 0.1).unwrap().metric).unwrap();
    assert_eq!(rep.total_abs_q.flag, Flag::Holds);
    assert_eq!(rep.total_rminus_pow.flag, Flag::Holds);
    assert_eq!(rep.total_r_sq.unwrap().flag, Flag::DivergesNumerically);
    assert!(rep.complete);
}

#[test]
fn holder_chain_on_cones_and_sphere() {
    for m in [
        zoo_sphere(4, 1.0).unwrap().metric,
        zoo_cone(4, 0.5, 0.1).unwrap().metric,
        zoo_cone(2, 0.3, 0.1).unwrap().metric,
    ] {
        for b in annulus_scalar_bound(&m, &[0.25, 0.5, 1.0, 4.0, 100.0]).unwrap() {
            assert!(b.holds(1e-8), "{}: {b:?}", m.label());
        }
    }
}

#[test]
fn pizzetti_coefficients_match_product_formula() {
    for k in 2..=8usize {
        let c = pizzetti_coefficients(k).unwrap();
        let n = 2 * k as i128;
        // a_{j+1}/a_j = 1/((2j)(n + 2j − 2)), starting from a₁ = 1
        let mut expected = Rational::from_integer(1);
        for (j, a) in c.a.iter().enumerate() {
            assert_eq!(*a, expected, "k = {k}, j = {}", j + 1);
            let jj = j as i128 + 1;
            expected /= Rational::from_integer(2 * jj * (n + 2 * jj - 2));
        }
        if k >= 3 {
            assert_eq!(c.a[1], Rational::new(1, 2 * 2 * k as i128));
        }
    }
}

#[test]
fn pizzetti_expansion_is_exact_for_radial_monomials() {
    for k in 2..=4usize {
        for m in 0..k as u32 {
            let h = AnalyticField::radial_power(2 * k, m).unwrap();
            let scale = |r: f64| (1.0 + r).powi(2 * m as i32);
            for (p, r) in [(vec![0.0; 2 * k], 0.7), (vec![0.0; 2 * k], 2.0)] {
                let res = spherical_mean_expansion_check(&h, k, &p, r).unwrap();
                assert!(res <= 1e-10 * scale(r), "k = {k}, m = {m}, r = {r}: {res}");
            }
            // off-centre spheres exercise the higher Laplacian powers
            let mut p = vec![0.0; 2 * k];
            p[0] = 0.3;
            p[1] = -0.4;
            let res = spherical_mean_expansion_check(&h, k, &p, 1.1).unwrap();
            assert!(res <= 1e-10 * scale(1.6), "k = {k}, m = {m}: {res}");
        }
    }
}

#[test]
fn shifted_metrics_keep_their_curvature_integrals() {
    // u ↦ u + c scales the metric by e^{2c}; ∫Q dv is scale invariant
    let u: Arc<dyn RadialFunction> = Arc::new(JetFn::new(|r| {
        (*r * *r).add_scalar(1.0).ln().scale(-1.0).add_scalar(5.0)
    }));
    let m = ConformalMetric::analytic(4, u, vec![0.0, 1.0], "shifted sphere").unwrap();
    assert!((total_q(&m).unwrap().value - 2.0).abs() < 1e-4);
}
