//! Every catalog entry against its expected values.

use qlab_core::curvature::{curvature_report, REPORT_TOLERANCE};
use qlab_core::geometry::{
    deficit_check, divergence_flux, geometry_series, hypothesis_report, total_q, Flag,
    HYPOTHESES_HOLD, HYPOTHESES_VIOLATED,
};
use qlab_core::potential::{
    dyadic_probes, normality_residual, NormalityThresholds, QDensity, Verdict,
};
use qlab_core::zoo::{self, Value, ZooEntry};

fn expect_number(e: &ZooEntry, key: &str, got: f64) {
    let (want, tol) = e.expected_number(key).unwrap_or_else(|| panic!("{} lacks {key}", e.name));
    assert!((got - want).abs() <= tol, "{} {key}: got {got}, want {want} ± {tol}", e.name);
}

fn expect_text(e: &ZooEntry, key: &str) -> &'static str {
    match e.expected[key].value {
        Value::Text(t) => t,
        ref v => panic!("{} {key} is not text: {v:?}", e.name),
    }
}

fn verdict_of(e: &ZooEntry, probes: &[f64]) -> qlab_core::potential::NormalityReport {
    let d = match &e.density {
        Some(d) => d.clone(),
        None => std::sync::Arc::new(QDensity::from_metric(&e.metric, None, Some(8.0)).unwrap()),
    };
    normality_residual(&e.metric, &d, probes, NormalityThresholds::default()).unwrap()
}

#[test]
fn flat_entry() {
    for n in [2, 4, 6] {
        let e = zoo::zoo_flat(n).unwrap();
        if n <= 4 {
            let rep = curvature_report(&e.metric, REPORT_TOLERANCE).unwrap();
            for (&q, &r) in rep.q.iter().zip(&rep.scalar) {
                expect_number(&e, "Q", q);
                expect_number(&e, "R", r);
            }
        }
        let g = geometry_series(&e.metric, &[0.3, 7.0, 1e4]).unwrap();
        for &i in &g.iso_ratio {
            expect_number(&e, "iso_ratio", i);
        }
        expect_number(&e, "total_q", total_q(&e.metric).unwrap().value);
        let d = deficit_check(&e.metric, 1e6).unwrap();
        expect_number(&e, "deficit_residual", d.deficit_residual);
        assert_eq!(d.status, HYPOTHESES_HOLD);
        assert!(d.hypotheses.complete);
        let v = verdict_of(&e, &dyadic_probes(1.0, 256.0));
        assert_eq!(v.verdict.as_str(), expect_text(&e, "verdict"));
    }
}

#[test]
fn sphere_entry() {
    let e = zoo::zoo_sphere(4, 1.0).unwrap();
    let rep = curvature_report(&e.metric, REPORT_TOLERANCE).unwrap();
    for i in 0..rep.nodes.len() {
        expect_number(&e, "R", rep.scalar[i]);
        expect_number(&e, "Q", rep.q[i]);
        expect_number(&e, "sigma2", rep.sigma2.as_ref().unwrap()[i]);
        expect_number(&e, "E2", rep.e_norm_sq.as_ref().unwrap()[i]);
    }
    rep.assert_identities().unwrap();
    expect_number(&e, "total_q", total_q(&e.metric).unwrap().value);
    for f in divergence_flux(&e.metric, &[0.5, 3.0, 100.0]).unwrap() {
        expect_number(&e, "flux", f.flux);
    }
    let h = hypothesis_report(&e.metric).unwrap();
    assert!(!h.complete);
    assert_eq!(h.sigma2_over.unwrap().flag, Flag::Fails);
    let d = deficit_check(&e.metric, 1e6).unwrap();
    assert_eq!(d.status, expect_text(&e, "deficit_status"));
    assert_eq!(d.status, HYPOTHESES_VIOLATED);
    // few probes: the density is read off the curvature, which is costly in debug builds
    let v = verdict_of(&e, &dyadic_probes(1.0, 8.0));
    assert_eq!(v.verdict.as_str(), expect_text(&e, "verdict"));
    assert!(v.h_spread < 1e-8, "{}", v.h_spread);

    let e2 = zoo::zoo_sphere(2, 1.0).unwrap();
    let rep = curvature_report(&e2.metric, REPORT_TOLERANCE).unwrap();
    for i in 0..rep.nodes.len() {
        expect_number(&e2, "R", rep.scalar[i]);
        expect_number(&e2, "Q", rep.q[i]);
    }
    expect_number(&e2, "total_q", total_q(&e2.metric).unwrap().value);
}

#[test]
fn cone_entries() {
    for alpha in [0.2, 0.5, 0.8] {
        let e = zoo::zoo_cone(4, alpha, 0.1).unwrap();
        expect_number(&e, "total_q", total_q(&e.metric).unwrap().value);
        let d = deficit_check(&e.metric, 1e6).unwrap();
        expect_number(&e, "iso_limit", d.iso_limit);
        assert!(d.deficit_residual < 0.02);
        assert_eq!(d.status, HYPOTHESES_HOLD);
        let v = verdict_of(&e, &dyadic_probes(1.0, 512.0));
        assert_eq!(v.verdict, Verdict::Normal);
        assert_eq!(v.verdict.as_str(), expect_text(&e, "verdict"));
        expect_number(&e, "h_spread", v.h_spread);
        // R ≥ 0 far out: no negative part
        let rep = curvature_report(&e.metric, REPORT_TOLERANCE).unwrap();
        for (&r, &m) in rep.nodes.iter().zip(&rep.scalar_minus) {
            if r > 2.0 {
                expect_number(&e, "R_minus_tail", m);
            }
        }
    }
    // the planar cone: total curvature α, complete, and the deficit identity
    let e = zoo::zoo_cone(2, 0.5, 0.1).unwrap();
    expect_number(&e, "total_q", total_q(&e.metric).unwrap().value);
    let d = deficit_check(&e.metric, 1e6).unwrap();
    assert!(d.deficit_residual < 0.02, "{d:?}");
}

#[test]
fn near_borderline_cone_warns() {
    let e = zoo::zoo_cone(4, 0.99, 0.1).unwrap();
    assert_eq!(e.warnings.len(), 1);
    assert!(zoo::zoo_cone(4, 1.2, 0.1).is_err());
}

#[test]
fn nonnormal_entry() {
    let e = zoo::zoo_nonnormal(4, 0.5).unwrap();
    let v = verdict_of(&e, &dyadic_probes(1.0, 4.0));
    assert_eq!(v.verdict.as_str(), expect_text(&e, "verdict"));
    for p in &v.probes {
        expect_number(&e, "lap_h_avg", p.lap_h_avg);
    }
    let h = hypothesis_report(&e.metric).unwrap();
    assert_eq!(
        serde_json::to_value(h.total_rminus_pow.flag).unwrap(),
        expect_text(&e, "total_Rminus_pow")
    );
    // Q e^{4u} is still the ring density: the perturbation r² is biharmonic
    assert_eq!(h.total_abs_q.flag, Flag::Holds);
}

#[test]
fn inequality_holds_whenever_hypotheses_do() {
    let mut entries = zoo::list().unwrap();
    for alpha in [0.2, 0.8] {
        entries.push(zoo::zoo_cone(4, alpha, 0.1).unwrap());
    }
    entries.push(zoo::zoo_flat(2).unwrap());
    entries.push(zoo::zoo_cone(2, 0.3, 0.1).unwrap());
    let mut checked = 0;
    for e in &entries {
        let h = hypothesis_report(&e.metric).unwrap();
        if h.holds() {
            let t = total_q(&e.metric).unwrap();
            assert!(t.value <= 1.0 + 1e-6, "{}: {}", e.name, t.value);
            checked += 1;
        }
    }
    assert!(checked >= 4);
}

#[test]
fn potential_built_entries_satisfy_the_construction_identity() {
    for e in [
        zoo::zoo_cone(4, 0.5, 0.1).unwrap(),
        zoo::zoo_cone(2, 0.5, 0.1).unwrap(),
        zoo::zoo_nonnormal(4, 0.5).unwrap(),
    ] {
        let d = e.density.as_ref().unwrap();
        for r in [0.0, 0.5, 0.95, 1.0, 1.3, 5.0] {
            let p = e.metric.point(r).unwrap();
            assert!((p.q_density - d.value(r)).abs() < 1e-8 * (1.0 + d.value(r).abs()), "{} r = {r}", e.name);
        }
    }
}

#[test]
fn expected_values_carry_origins() {
    for e in zoo::list().unwrap() {
        let json = e.to_json();
        for (k, v) in json["expected"].as_object().unwrap() {
            assert!(v["origin"].is_string(), "{} {k}", e.name);
        }
        assert!(e.summary().contains(&format!("n={}", e.n)));
    }
}
