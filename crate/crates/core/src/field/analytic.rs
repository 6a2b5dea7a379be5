use std::fmt;
use std::sync::Arc;

use crate::error::{check_dimension, Error, Result};
use crate::quadrature::gauss_gegenbauer;

/// Point evaluator `x ↦ f(x)` on ℝⁿ.
pub type PointFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Closed-form field on ℝⁿ with optional gradient and iterated Laplacians.
///
/// `laplacians[j - 1]` evaluates Δʲf.
#[derive(Clone)]
pub struct AnalyticField {
    n: usize,
    f: PointFn,
    grad: Option<GradFn>,
    laplacians: Vec<PointFn>,
    /// Laplacian powers beyond the supplied ones vanish identically.
    closed: bool,
}

impl fmt::Debug for AnalyticField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticField")
            .field("n", &self.n)
            .field("has_grad", &self.grad.is_some())
            .field("laplacian_powers", &self.laplacians.len())
            .finish()
    }
}

impl AnalyticField {
    pub fn new(n: usize, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Result<Self> {
        check_dimension(n)?;
        Ok(AnalyticField {
            n,
            f: Arc::new(f),
            grad: None,
            laplacians: Vec::new(),
            closed: false,
        })
    }

    pub fn with_gradient(
        mut self,
        g: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Self {
        self.grad = Some(Arc::new(g));
        self
    }

    /// Appends the evaluator of the next Laplacian power.
    pub fn with_laplacian_power(mut self, g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        self.laplacians.push(Arc::new(g));
        self
    }

    /// Declares every Laplacian power past the supplied ones to be zero (polyharmonic f).
    pub fn with_vanishing_higher_powers(mut self) -> Self {
        self.closed = true;
        self
    }

    /// |x|^{2m} with closed-form gradient and every nonzero Laplacian power.
    pub fn radial_power(n: usize, m: u32) -> Result<Self> {
        let mut field = AnalyticField::new(n, move |x| norm_sq(x).powi(m as i32))?;
        field = field.with_gradient(move |x| {
            let s = if m == 0 { 0.0 } else { 2.0 * m as f64 * norm_sq(x).powi(m as i32 - 1) };
            x.iter().map(|xi| s * xi).collect()
        });
        // Δ|x|^{2q} = 2q(2q + n − 2)|x|^{2q−2}
        let mut coef = 1.0;
        for j in 1..=m {
            let q = (m - j + 1) as f64;
            coef *= 2.0 * q * (2.0 * q + n as f64 - 2.0);
            let c = coef;
            let power = (m - j) as i32;
            field = field.with_laplacian_power(move |x| c * norm_sq(x).powi(power));
        }
        Ok(field.with_vanishing_higher_powers())
    }

    /// The coordinate function x_i (harmonic).
    pub fn coordinate(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::Domain(format!("coordinate {i} out of range for n = {n}")));
        }
        Ok(AnalyticField::new(n, move |x| x[i])?
            .with_gradient(move |x| {
                let mut g = vec![0.0; x.len()];
                g[i] = 1.0;
                g
            })
            .with_laplacian_power(|_| 0.0)
            .with_vanishing_higher_powers())
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        self.grad.as_ref().map(|g| g(x))
    }

    /// Δʲf at `x`; `j = 0` is f itself. `None` if that power is unknown.
    pub fn laplacian_power(&self, j: usize, x: &[f64]) -> Option<f64> {
        if j == 0 {
            Some(self.eval(x))
        } else if j > self.laplacians.len() && self.closed {
            Some(0.0)
        } else {
            self.laplacians.get(j - 1).map(|g| g(x))
        }
    }

    pub fn laplacian_powers(&self) -> usize {
        self.laplacians.len()
    }

    /// Field whose value is Δʲf (requires that power to be supplied).
    pub fn laplacian_field(&self, j: usize) -> Option<AnalyticField> {
        if j == 0 {
            return Some(self.clone());
        }
        if j > self.laplacians.len() {
            return self
                .closed
                .then(|| AnalyticField::new(self.n, |_| 0.0).ok())
                .flatten()
                .map(AnalyticField::with_vanishing_higher_powers);
        }
        let f = self.laplacians[j - 1].clone();
        Some(AnalyticField {
            n: self.n,
            f,
            grad: None,
            laplacians: self.laplacians[j..].to_vec(),
            closed: self.closed,
        })
    }

    /// Largest relative discrepancy between the supplied derivative evaluators and
    /// fourth-order central differences of the lower-order evaluator, over `probes`.
    pub fn derivative_discrepancy(&self, probes: &[Vec<f64>], h: f64) -> f64 {
        let mut worst: f64 = 0.0;
        let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
        for p in probes {
            assert_eq!(p.len(), self.n);
            if let Some(g) = self.gradient(p) {
                for i in 0..self.n {
                    let d = central(|x| self.eval(x), p, i, h).0;
                    worst = worst.max(rel(g[i], d));
                }
            }
            for j in 1..=self.laplacians.len() {
                let lower = |x: &[f64]| self.laplacian_power(j - 1, x).expect("power present");
                let fd: f64 = (0..self.n).map(|i| central(lower, p, i, h).1).sum();
                worst = worst.max(rel(self.laplacian_power(j, p).expect("present"), fd));
            }
        }
        worst
    }
}

/// Fourth-order central first and second differences along axis `i`.
fn central(f: impl Fn(&[f64]) -> f64, p: &[f64], i: usize, h: f64) -> (f64, f64) {
    let mut x = p.to_vec();
    let mut at = |t: f64| {
        x[i] = p[i] + t;
        f(&x)
    };
    let (m2, m1, z, p1, p2) = (at(-2.0 * h), at(-h), at(0.0), at(h), at(2.0 * h));
    let d1 = (m2 - 8.0 * m1 + 8.0 * p1 - p2) / (12.0 * h);
    let d2 = (-m2 + 16.0 * m1 - 30.0 * z + 16.0 * p1 - p2) / (12.0 * h * h);
    (d1, d2)
}

fn norm_sq(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

/// Product rule for the uniform probability measure on S^{n−1}.
///
/// Hyperspherical angles φ₁…φ_{n−2} use Gauss–Gegenbauer nodes in cos φ for the
/// sinᵐφ weights; the last angle uses the trapezoid rule, which is exact for
/// trigonometric polynomials of degree below its point count.
#[derive(Clone, Debug)]
pub struct SphereRule {
    n: usize,
    polar: Vec<(Vec<f64>, Vec<f64>)>,
    azimuth: usize,
}

impl SphereRule {
    /// Rule with `q` Gauss points per polar angle and `2q` azimuthal points.
    pub fn with_points(n: usize, q: usize) -> Result<Self> {
        check_dimension(n)?;
        if q == 0 {
            return Err(Error::Domain("sphere rule needs at least one point".into()));
        }
        // φ_i carries sin^{n-1-i} φ_i, i = 1..n-2
        let polar = (1..n - 1)
            .map(|i| gauss_gegenbauer(q, (n - 1 - i) as f64 / 2.0))
            .collect();
        Ok(SphereRule {
            n,
            polar,
            azimuth: 2 * q,
        })
    }

    /// Default resolution: exact for polynomials well beyond degree 10 and
    /// spectrally accurate for smooth fields, at a few hundred thousand points.
    pub fn default_for(n: usize) -> Result<Self> {
        let q = match n {
            2 => 64,
            4 => 24,
            6 => 12,
            8 => 6,
            _ => 4,
        };
        Self::with_points(n, q)
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn point_count(&self) -> usize {
        self.polar.iter().map(|p| p.0.len()).product::<usize>() * self.azimuth
    }

    /// Mean of `f` over the sphere of radius `r` centred at `p`.
    pub fn average(&self, f: impl Fn(&[f64]) -> f64, p: &[f64], r: f64) -> f64 {
        assert_eq!(p.len(), self.n, "centre has wrong dimension");
        let mut x = p.to_vec();
        let mut acc = Neumaier::default();
        self.walk(0, 1.0, r, 1.0, p, &mut x, &f, &mut acc);
        acc.total()
    }

    #[allow(clippy::too_many_arguments)]
    fn walk(
        &self,
        level: usize,
        weight: f64,
        r: f64,
        sin_prod: f64,
        p: &[f64],
        x: &mut [f64],
        f: &dyn Fn(&[f64]) -> f64,
        acc: &mut Neumaier,
    ) {
        if level == self.n - 2 {
            let m = self.azimuth;
            let w = weight / m as f64;
            for j in 0..m {
                let theta = std::f64::consts::TAU * j as f64 / m as f64;
                x[level] = p[level] + r * sin_prod * theta.cos();
                x[level + 1] = p[level + 1] + r * sin_prod * theta.sin();
                acc.add(w * f(x));
            }
            return;
        }
        let (ts, ws) = &self.polar[level];
        for (t, wt) in ts.iter().zip(ws) {
            let s = (1.0 - t * t).max(0.0).sqrt();
            x[level] = p[level] + r * sin_prod * t;
            self.walk(level + 1, weight * wt, r, sin_prod * s, p, x, f, acc);
        }
    }
}

#[derive(Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

/// ⨍_{∂B_r(p)} f dσ with the default [`SphereRule`] for f's dimension.
pub fn sphere_average(f: &AnalyticField, p: &[f64], r: f64) -> Result<f64> {
    let rule = SphereRule::default_for(f.dimension())?;
    sphere_average_with(&rule, f, p, r)
}

pub fn sphere_average_with(rule: &SphereRule, f: &AnalyticField, p: &[f64], r: f64) -> Result<f64> {
    if rule.dimension() != f.dimension() || p.len() != f.dimension() {
        return Err(Error::Invalid(format!(
            "dimension mismatch: rule {}, field {}, centre {}",
            rule.dimension(),
            f.dimension(),
            p.len()
        )));
    }
    if !(r > 0.0) {
        return Err(Error::Domain(format!("sphere radius must be positive, got {r}")));
    }
    Ok(rule.average(|x| f.eval(x), p, r))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_mean_value() {
        for n in [2, 4, 6] {
            let f = AnalyticField::coordinate(n, 0).unwrap();
            let mut p = vec![0.0; n];
            p[0] = 0.7;
            p[n - 1] = -0.2;
            let avg = sphere_average(&f, &p, 1.9).unwrap();
            assert!((avg - 0.7).abs() < 1e-12, "n={n}: {avg}");
        }
    }

    #[test]
    fn radius_squared_means() {
        for n in [2, 4] {
            let f = AnalyticField::radial_power(n, 1).unwrap();
            let zero = vec![0.0; n];
            assert!((sphere_average(&f, &zero, 1.5).unwrap() - 2.25).abs() < 1e-12);
            let mut p = vec![0.0; n];
            p[1] = 0.6;
            p[0] = -0.8;
            let avg = sphere_average(&f, &p, 2.0).unwrap();
            assert!((avg - 5.0).abs() < 1e-12, "{avg}");
        }
    }

    #[test]
    fn harmonic_polynomial_mean() {
        // x₁² − x₂² + 3x₁x₃x₄ is harmonic in ℝ⁴
        let f = AnalyticField::new(4, |x| x[0] * x[0] - x[1] * x[1] + 3.0 * x[0] * x[2] * x[3])
            .unwrap();
        let p = [0.3, -1.1, 0.4, 2.0];
        let centre = f.eval(&p);
        let avg = sphere_average(&f, &p, 0.9).unwrap();
        assert!((avg - centre).abs() < 1e-8);
    }

    #[test]
    fn smooth_non_polynomial_mean() {
        // mean of e^{x₁} over the unit circle is I₀(1)
        let f = AnalyticField::new(2, |x| x[0].exp()).unwrap();
        let avg = sphere_average(&f, &[0.0, 0.0], 1.0).unwrap();
        assert!((avg - 1.266_065_877_752_008_4).abs() < 1e-13);
    }

    #[test]
    fn supplied_derivatives_agree_with_differences() {
        let f = AnalyticField::radial_power(4, 3).unwrap();
        let probes = vec![vec![0.3, -0.5, 0.9, 0.1], vec![1.2, 0.4, -0.7, 0.6]];
        assert!(f.derivative_discrepancy(&probes, 1e-3) < 1e-8);
        let bad = AnalyticField::new(4, |x| x[0] * x[0]).unwrap().with_laplacian_power(|_| 3.0);
        assert!(bad.derivative_discrepancy(&probes, 1e-3) > 0.1);
    }

    #[test]
    fn rejects_odd_dimension() {
        assert!(matches!(
            AnalyticField::new(3, |_| 0.0),
            Err(Error::InvalidDimension(3))
        ));
    }
}
