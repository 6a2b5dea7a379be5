use super::{RadialFunction, RadialProfile};
use crate::error::{check_dimension, Error, Result};
use crate::quadrature::{adaptive_with_breaks, Tolerance};

/// Finite-difference weights for derivatives `0..=m` at `x0` from arbitrary nodes `xs`.
///
/// Fornberg's recursion; `w[k][j]` is the weight of `f(xs[j])` in the k-th derivative.
pub fn fornberg_weights(x0: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let n = xs.len();
    let mut c = vec![vec![0.0; n]; m + 1];
    c[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = xs[0] - x0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - x0;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

const MIN_NODES: usize = 5;

/// First and second radial derivatives on the profile's nodes.
///
/// Interior nodes use centered five-point stencils, the ends six-point one-sided ones.
/// When the first node is `r = 0` the profile is treated as even in `r` (a smooth radial
/// function), so the origin and its neighbours also get centered stencils.
pub fn radial_derivatives(f: &RadialProfile) -> Result<(Vec<f64>, Vec<f64>)> {
    let nodes = f.nodes();
    let values = f.values();
    if nodes.len() < MIN_NODES {
        return Err(Error::DegenerateGrid {
            needed: MIN_NODES,
            got: nodes.len(),
        });
    }
    let reflect = if nodes[0] == 0.0 { 2 } else { 0 };
    let mut xs = Vec::with_capacity(nodes.len() + reflect);
    let mut ys = Vec::with_capacity(nodes.len() + reflect);
    for j in (1..=reflect).rev() {
        xs.push(-nodes[j]);
        ys.push(values[j]);
    }
    xs.extend_from_slice(nodes);
    ys.extend_from_slice(values);
    let len = xs.len();
    let wide = if len >= 6 { 6 } else { len };

    let mut d1 = Vec::with_capacity(nodes.len());
    let mut d2 = Vec::with_capacity(nodes.len());
    for i in 0..nodes.len() {
        let j = i + reflect;
        let (lo, hi) = if j >= 2 && j + 2 < len {
            (j - 2, j + 3)
        } else if j < 2 {
            (0, wide)
        } else {
            (len - wide, len)
        };
        let w = fornberg_weights(xs[j], &xs[lo..hi], 2);
        let mut a = 0.0;
        let mut b = 0.0;
        for (k, y) in ys[lo..hi].iter().enumerate() {
            a += w[1][k] * y;
            b += w[2][k] * y;
        }
        if reflect > 0 && i == 0 {
            a = 0.0;
        }
        d1.push(a);
        d2.push(b);
    }
    Ok((d1, d2))
}

/// Δf = f″ + (n−1)/r·f′ on the same nodes.
///
/// At `r = 0` the value is the regular limit `n·f″(0)`, realised as the even extrapolation
/// of the neighbouring nodes.
pub fn radial_laplacian(f: &RadialProfile, n: usize) -> Result<RadialProfile> {
    check_dimension(n)?;
    let (d1, d2) = radial_derivatives(f)?;
    let nm1 = (n - 1) as f64;
    let nodes = f.nodes();
    let mut values: Vec<f64> = nodes
        .iter()
        .zip(d1.iter().zip(&d2))
        .map(|(&r, (&a, &b))| if r == 0.0 { n as f64 * b } else { b + nm1 * a / r })
        .collect();
    if nodes[0] == 0.0 {
        // The stencil error of f′/r tends to a different limit than that of n·f″(0), so the
        // plain regular-limit value leaves an O(h⁴) kink at the origin that a second
        // Laplacian amplifies to O(h²). Extrapolating the even interior values in t = r²
        // keeps the discrete Laplacian smooth through r = 0.
        let t: Vec<f64> = nodes[1..4].iter().map(|r| r * r).collect();
        let mut v0 = 0.0;
        for i in 0..3 {
            let mut l = 1.0;
            for j in 0..3 {
                if i != j {
                    l *= t[j] / (t[j] - t[i]);
                }
            }
            v0 += l * values[i + 1];
        }
        values[0] = v0;
    }
    f.with_values(values)
}

/// Result of [`radial_polyharmonic`], with the boundary trimming it applied.
#[derive(Clone, Debug)]
pub struct Polyharmonic {
    pub profile: RadialProfile,
    /// Nodes removed from the inner end (zero when the grid starts at the origin).
    pub trimmed_front: usize,
    /// Nodes removed from the outer end.
    pub trimmed_back: usize,
}

/// Δᵏf by k applications of [`radial_laplacian`].
///
/// After every application the two nodes at each open end (the ones computed with
/// one-sided closures) are dropped; an end at `r = 0` is never trimmed. Needs at least
/// `4k + 1` nodes.
pub fn radial_polyharmonic(f: &RadialProfile, n: usize, k: usize) -> Result<Polyharmonic> {
    check_dimension(n)?;
    if k == 0 {
        return Err(Error::Domain("polyharmonic order must be positive".into()));
    }
    let needed = 4 * k + 1;
    if f.len() < needed {
        return Err(Error::DegenerateGrid {
            needed,
            got: f.len(),
        });
    }
    let front = if f.nodes()[0] == 0.0 { 0 } else { 2 };
    let mut cur = f.clone();
    for _ in 0..k {
        let lap = radial_laplacian(&cur, n)?;
        cur = lap.slice(front, lap.len() - 2);
    }
    Ok(Polyharmonic {
        profile: cur,
        trimmed_front: front * k,
        trimmed_back: 2 * k,
    })
}

/// |∇f|² = (f′)² for a radial f.
pub fn radial_gradient_norm_sq(f: &RadialProfile) -> Result<RadialProfile> {
    let (d1, _) = radial_derivatives(f)?;
    f.with_values(d1.into_iter().map(|a| a * a).collect())
}

/// Volume average of a radial field over the annulus `B_{2r} ∖ B_r` in ℝⁿ.
pub fn annulus_average(f: &dyn RadialFunction, n: usize, r: f64) -> Result<f64> {
    check_dimension(n)?;
    if !(r > 0.0) {
        return Err(Error::Domain(format!("annulus radius must be positive, got {r}")));
    }
    let (lo, hi) = f.domain();
    if r < lo || 2.0 * r > hi {
        let bad = if r < lo { r } else { 2.0 * r };
        return Err(Error::Coverage { r: bad, lo, hi });
    }
    Ok(annulus_mean(n, r, &f.breakpoints(), 0.0, |s| f.value(s)))
}

/// Annulus average of an arbitrary radial integrand, splitting at `breaks` inside `(r, 2r)`.
///
/// `abs` is an absolute accuracy target for the mean, for integrands that may vanish.
pub(crate) fn annulus_mean(
    n: usize,
    r: f64,
    breaks: &[f64],
    abs: f64,
    f: impl Fn(f64) -> f64,
) -> f64 {
    let mut pts = vec![r];
    pts.extend(breaks.iter().copied().filter(|&b| b > r && b < 2.0 * r));
    pts.push(2.0 * r);
    let p = (n - 1) as i32;
    // ∫_r^{2r} (s/r)^{n-1} ds = r(2ⁿ − 1)/n
    let measure = r * (2f64.powi(n as i32) - 1.0) / n as f64;
    let tol = Tolerance {
        abs: (abs * measure).max(1e-300),
        ..Tolerance::rel(1e-12)
    };
    let integral = adaptive_with_breaks(|s| f(s) * (s / r).powi(p), &pts, tol);
    integral.value / measure
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::NodeLayout;

    fn profile(nodes: Vec<f64>, f: impl Fn(f64) -> f64) -> RadialProfile {
        RadialProfile::from_fn(nodes, f).unwrap()
    }

    #[test]
    fn fornberg_centered_second_derivative() {
        let w = fornberg_weights(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 2);
        let expect = [-1.0 / 12.0, 4.0 / 3.0, -5.0 / 2.0, 4.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w[2].iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn laplacian_of_r_squared_is_2n() {
        let p = profile(NodeLayout::uniform(0.0, 3.0, 31), |r| r * r);
        let lap = radial_laplacian(&p, 4).unwrap();
        for v in lap.values() {
            assert!((v - 8.0).abs() < 1e-10, "{v}");
        }
    }

    #[test]
    fn log_is_harmonic_in_the_plane() {
        let p = profile(NodeLayout::geometric(0.5, 5.0, 400).build().unwrap(), |r| {
            (1.0 / r).ln()
        });
        let lap = radial_laplacian(&p, 2).unwrap();
        let interior = &lap.values()[2..lap.len() - 2];
        assert!(interior.iter().all(|v| v.abs() < 1e-6), "{:?}", &interior[..3]);
    }

    #[test]
    fn gaussian_laplacian_matches_symbolic() {
        // Δ e^{-r²} in ℝ⁴ = (4r² − 8) e^{-r²}
        let p = profile(NodeLayout::uniform(0.0, 4.0, 801), |r| (-r * r).exp());
        let lap = radial_laplacian(&p, 4).unwrap();
        for (r, v) in lap.nodes().iter().zip(lap.values()) {
            let exact = (4.0 * r * r - 8.0) * (-r * r).exp();
            assert!((v - exact).abs() < 1e-8, "r={r} got {v} want {exact}");
        }
    }

    #[test]
    fn polyharmonic_examples() {
        let nodes = NodeLayout::uniform(0.0, 3.0, 61);
        let r4 = profile(nodes.clone(), |r| r.powi(4));
        let out = radial_polyharmonic(&r4, 6, 2).unwrap();
        assert_eq!(out.trimmed_front, 0);
        assert_eq!(out.trimmed_back, 4);
        assert!(out.profile.values().iter().all(|v| (v - 384.0).abs() < 1e-7));

        let r2 = profile(nodes, |r| r * r);
        let out = radial_polyharmonic(&r2, 4, 2).unwrap();
        assert!(out.profile.values().iter().all(|v| v.abs() < 1e-8));

        // few nodes on purpose: the fourth difference loses ε/h⁴ to rounding
        let lg = profile(NodeLayout::geometric(1.0, 4.0, 200).build().unwrap(), |r| {
            (1.0 / r).ln()
        });
        let out = radial_polyharmonic(&lg, 4, 2).unwrap();
        assert_eq!(out.trimmed_front, 4);
        assert!(out.profile.values().iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn polyharmonic_needs_enough_nodes() {
        let p = profile(NodeLayout::uniform(1.0, 2.0, 8), |r| r);
        assert!(matches!(
            radial_polyharmonic(&p, 4, 2),
            Err(Error::DegenerateGrid { needed: 9, got: 8 })
        ));
        assert!(matches!(
            radial_laplacian(&profile(vec![1.0, 2.0, 3.0, 4.0], |r| r), 4),
            Err(Error::DegenerateGrid { .. })
        ));
        assert!(matches!(
            radial_laplacian(&profile(NodeLayout::uniform(1.0, 2.0, 8), |r| r), 3),
            Err(Error::InvalidDimension(3))
        ));
    }

    #[test]
    fn gradient_norm_examples() {
        let nodes = NodeLayout::uniform(0.0, 3.0, 301);
        let g = radial_gradient_norm_sq(&profile(nodes.clone(), |r| r * r)).unwrap();
        for (r, v) in g.nodes().iter().zip(g.values()) {
            assert!((v - 4.0 * r * r).abs() < 1e-10);
        }
        let g = radial_gradient_norm_sq(&profile(nodes.clone(), |_| 3.0)).unwrap();
        assert!(g.values().iter().all(|v| v.abs() < 1e-20));
        // fourth order: halving the spacing divides the error by about 16
        let err = |count: usize| {
            let nodes = NodeLayout::uniform(0.0, 3.0, count);
            let g = radial_gradient_norm_sq(&profile(nodes, |r| (2.0 / (1.0 + r * r)).ln()))
                .unwrap();
            g.nodes()
                .iter()
                .zip(g.values())
                .map(|(r, v)| (v - 4.0 * r * r / (1.0 + r * r).powi(2)).abs())
                .fold(0.0, f64::max)
        };
        let (coarse, fine) = (err(301), err(601));
        assert!(fine < 1e-8, "{fine}");
        assert!(coarse / fine > 12.0, "{coarse} {fine}");
    }

    #[test]
    fn annulus_average_examples() {
        let nodes = NodeLayout::uniform(0.5, 30.0, 119);
        let c = profile(nodes.clone(), |_| 2.5);
        assert!((annulus_average(&c, 4, 3.0).unwrap() - 2.5).abs() < 1e-13);
        let lin = profile(nodes, |s| s);
        let avg = annulus_average(&lin, 2, 1.0).unwrap();
        assert!((avg - 14.0 / 9.0).abs() < 1e-12, "{avg}");
        let inv = crate::field::JetFn::new(|r| r.powi(2).recip());
        assert!((annulus_average(&inv, 4, 10.0).unwrap() - 0.004).abs() < 1e-14);
    }

    #[test]
    fn annulus_average_coverage() {
        let p = profile(NodeLayout::uniform(1.0, 3.0, 9), |s| s);
        assert!(matches!(
            annulus_average(&p, 2, 2.0),
            Err(Error::Coverage { .. })
        ));
        assert!(annulus_average(&p, 2, 1.5).is_ok());
    }
}
