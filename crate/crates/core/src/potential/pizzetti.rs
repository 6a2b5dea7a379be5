//! Spherical means of polyharmonic functions.
//!
//! For h with Δᵏh = 0 in ℝ^{2k},
//!
//! ```text
//! ⨍_{∂B_r(p)} Δh = Σ_{j=1}^{k−1} a_j r^{2(j−1)} Δʲh(p),
//! a_j = 1 / ([2·4···(2j−2)] · [n(n+2)···(n+2j−4)]),   n = 2k.
//! ```

use std::fmt;

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{sphere_average, AnalyticField};

pub type Rational = Ratio<i128>;

/// Exact coefficients a₁, …, a_{k−1}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PizzettiCoefficients {
    pub k: usize,
    pub a: Vec<Rational>,
}

#[derive(Serialize)]
struct Json {
    k: usize,
    a: Vec<String>,
}

impl PizzettiCoefficients {
    /// Coefficients as `f64`.
    pub fn as_f64(&self) -> Vec<f64> {
        self.a
            .iter()
            .map(|q| *q.numer() as f64 / *q.denom() as f64)
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(Json {
            k: self.k,
            a: self.a.iter().map(|q| q.to_string()).collect(),
        })
        .expect("plain data")
    }
}

impl fmt::Display for PizzettiCoefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, a) in self.a.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "a{}={}", i + 1, a)?;
        }
        Ok(())
    }
}

/// ∏ of `count` terms `start, start + 2, …`, or `None` on overflow.
fn even_product(start: i128, count: usize) -> Option<i128> {
    (0..count as i128).try_fold(1i128, |acc, i| acc.checked_mul(start + 2 * i))
}

fn overflow(k: usize) -> Error {
    Error::Domain(format!("coefficients for k = {k} overflow 128-bit rationals"))
}

/// a_j from the ascending form `[2·4···(2j−2)]·[n(n+2)···(n+2j−4)]`.
pub(crate) fn ascending(k: usize) -> Result<Vec<Rational>> {
    let n = 2 * k as i128;
    (1..k)
        .map(|j| {
            let d = even_product(2, j - 1)
                .zip(even_product(n, j - 1))
                .and_then(|(a, b)| a.checked_mul(b))
                .ok_or_else(|| overflow(k))?;
            Ok(Rational::new(1, d))
        })
        .collect()
}

/// a_{k−j} from the descending form `[2·4···(2(k−j)−2)]·[(2k)(2k+2)···(4(k−1)−2j)]`.
pub(crate) fn descending(k: usize) -> Result<Vec<Rational>> {
    let mut a = vec![Rational::from_integer(0); k - 1];
    for j in 1..k {
        let first = even_product(2, k - j - 1);
        // (2k)(2k+2)···(4(k−1)−2j): terms from 2k up to 4k − 4 − 2j in steps of 2
        let last = 4 * (k as i128 - 1) - 2 * j as i128;
        let count = if last >= 2 * k as i128 {
            ((last - 2 * k as i128) / 2 + 1) as usize
        } else {
            0
        };
        let second = even_product(2 * k as i128, count);
        let d = first
            .zip(second)
            .and_then(|(x, y)| x.checked_mul(y))
            .ok_or_else(|| overflow(k))?;
        a[k - j - 1] = Rational::new(1, d);
    }
    Ok(a)
}

/// Exact Pizzetti coefficients for n = 2k; both product forms are evaluated and must agree.
pub fn pizzetti_coefficients(k: usize) -> Result<PizzettiCoefficients> {
    if k < 2 {
        return Err(Error::Domain(format!("Pizzetti coefficients need k >= 2, got {k}")));
    }
    let a = ascending(k)?;
    let b = descending(k)?;
    if a != b {
        return Err(Error::Identity {
            which: "pizzetti product forms",
            residual: f64::NAN,
            tol: 0.0,
        });
    }
    Ok(PizzettiCoefficients { k, a })
}

/// |⨍_{∂B_r(p)} Δh − Σ_{j=1}^{k−1} a_j r^{2(j−1)} Δʲh(p)| for h in ℝ^{2k}.
///
/// h must supply its Laplacian powers up to k − 1 (or declare the higher ones zero).
pub fn spherical_mean_expansion_check(
    h: &AnalyticField,
    k: usize,
    p: &[f64],
    r: f64,
) -> Result<f64> {
    if h.dimension() != 2 * k {
        return Err(Error::Invalid(format!(
            "expansion with k = {k} needs a field on R^{}, got R^{}",
            2 * k,
            h.dimension()
        )));
    }
    let coeffs = pizzetti_coefficients(k)?.as_f64();
    let lap = h
        .laplacian_field(1)
        .ok_or_else(|| Error::Invalid("field does not supply its Laplacian".into()))?;
    let left = sphere_average(&lap, p, r)?;
    let mut right = 0.0;
    for (i, a) in coeffs.iter().enumerate() {
        let j = i + 1;
        let lj = h
            .laplacian_power(j, p)
            .ok_or_else(|| Error::Invalid(format!("field does not supply Δ^{j}")))?;
        right += a * r.powi(2 * (j as i32 - 1)) * lj;
    }
    Ok((left - right).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_k_values() {
        let c2 = pizzetti_coefficients(2).unwrap();
        assert_eq!(c2.a, vec![Rational::from_integer(1)]);
        assert_eq!(c2.to_string(), "a1=1");
        let c3 = pizzetti_coefficients(3).unwrap();
        assert_eq!(c3.a, vec![Rational::from_integer(1), Rational::new(1, 12)]);
        assert_eq!(c3.to_string(), "a1=1 a2=1/12");
        assert!(matches!(pizzetti_coefficients(1), Err(Error::Domain(_))));
    }

    #[test]
    fn forms_agree_and_are_positive() {
        for k in 2..=8 {
            let a = ascending(k).unwrap();
            assert_eq!(a, descending(k).unwrap());
            assert_eq!(a[0], Rational::from_integer(1));
            assert!(a.iter().all(|q| *q > Rational::from_integer(0)));
            if k >= 3 {
                assert_eq!(a[1], Rational::new(1, 2 * 2 * k as i128));
            }
        }
    }

    #[test]
    fn r4_in_six_dimensions() {
        let h = AnalyticField::radial_power(6, 2).unwrap();
        for r in [0.5, 1.0, 3.0] {
            let res = spherical_mean_expansion_check(&h, 3, &[0.0; 6], r).unwrap();
            assert!(res <= 1e-10 * (32.0 * r * r).max(1.0), "{res}");
        }
    }
}
