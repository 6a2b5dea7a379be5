use crate::error::{Error, Result};

/// Cell-centred uniform grid on the box `[-L, L]ⁿ`, n ∈ {2, 4}.
///
/// Cell centres never coincide with the origin, so fields singular there can be sampled.
#[derive(Clone, Debug)]
pub struct GridField {
    n: usize,
    h: f64,
    half_width: f64,
    cells: usize,
    values: Vec<f64>,
}

impl GridField {
    pub fn from_fn(n: usize, h: f64, half_width: f64, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        if n != 2 && n != 4 {
            return Err(Error::UnsupportedDimension { op: "GridField", n });
        }
        if !(h > 0.0 && half_width > 0.0) {
            return Err(Error::Invalid(format!(
                "grid spacing {h} and half-width {half_width} must be positive"
            )));
        }
        let cells = (2.0 * half_width / h).round() as usize;
        if cells == 0 || ((cells as f64) * h - 2.0 * half_width).abs() > 1e-9 * half_width {
            return Err(Error::Invalid(format!(
                "half-width {half_width} is not a multiple of h/2 = {}",
                h / 2.0
            )));
        }
        let total = cells.checked_pow(n as u32).ok_or_else(|| {
            Error::Invalid(format!("{cells}^{n} grid cells overflow"))
        })?;
        let mut values = Vec::with_capacity(total);
        let mut x = vec![0.0; n];
        for idx in 0..total {
            let mut rem = idx;
            for xi in x.iter_mut() {
                *xi = -half_width + (rem % cells) as f64 * h + 0.5 * h;
                rem /= cells;
            }
            let v = f(&x);
            if !v.is_finite() {
                return Err(Error::Invalid(format!("non-finite grid value at {x:?}")));
            }
            values.push(v);
        }
        Ok(GridField {
            n,
            h,
            half_width,
            cells,
            values,
        })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Cells per axis (`2L/h`).
    pub fn extent(&self) -> usize {
        self.cells
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Midpoint-rule integral over the box.
    pub fn integrate(&self) -> f64 {
        crate::quadrature::pairwise_sum(&self.values) * self.h.powi(self.n as i32)
    }
}
