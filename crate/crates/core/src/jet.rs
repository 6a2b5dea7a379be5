//! Truncated Taylor series in one variable ("jets").
//!
//! A [`Jet`] stores `f(r + ε) = c₀ + c₁ε + … + c_k ε^k` for a fixed expansion point `r`.
//! Arithmetic on jets is forward-mode differentiation to arbitrary (bounded) order, which
//! lets closed-form conformal factors deliver the fourth derivatives the Q-curvature needs
//! without finite differences.

use std::ops::{Add, Mul, Neg, Sub};

/// Highest Taylor coefficient a jet can carry.
pub const MAX_ORDER: usize = 7;

/// Truncated Taylor expansion with `order + 1` valid coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    c: [f64; MAX_ORDER + 1],
    order: usize,
    /// Expansion point; needed to divide by the independent variable.
    at: f64,
}

impl Jet {
    pub fn constant(value: f64, at: f64, order: usize) -> Self {
        let mut c = [0.0; MAX_ORDER + 1];
        c[0] = value;
        Jet {
            c,
            order: order.min(MAX_ORDER),
            at,
        }
    }

    /// The independent variable `r` itself, expanded at `at`.
    pub fn variable(at: f64, order: usize) -> Self {
        let mut j = Self::constant(at, at, order);
        if j.order >= 1 {
            j.c[1] = 1.0;
        }
        j
    }

    /// Builds a jet from derivative values `[f, f', f'', …]`.
    pub fn from_derivatives(at: f64, derivs: &[f64]) -> Self {
        assert!(!derivs.is_empty() && derivs.len() <= MAX_ORDER + 1);
        let mut c = [0.0; MAX_ORDER + 1];
        let mut fact = 1.0;
        for (k, d) in derivs.iter().enumerate() {
            if k > 0 {
                fact *= k as f64;
            }
            c[k] = d / fact;
        }
        Jet {
            c,
            order: derivs.len() - 1,
            at,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn at(&self) -> f64 {
        self.at
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coeff(&self, k: usize) -> f64 {
        assert!(k <= self.order, "coefficient {k} beyond jet order {}", self.order);
        self.c[k]
    }

    /// k-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> f64 {
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        self.coeff(k) * fact
    }

    pub fn truncate(mut self, order: usize) -> Self {
        let order = order.min(self.order);
        for k in order + 1..=MAX_ORDER {
            self.c[k] = 0.0;
        }
        self.order = order;
        self
    }

    fn zip(&self, other: &Jet) -> (usize, f64) {
        debug_assert!(
            self.at == other.at,
            "jets expanded at different points ({} vs {})",
            self.at,
            other.at
        );
        (self.order.min(other.order), self.at)
    }

    pub fn scale(mut self, s: f64) -> Self {
        for k in 0..=self.order {
            self.c[k] *= s;
        }
        self
    }

    pub fn add_scalar(mut self, s: f64) -> Self {
        self.c[0] += s;
        self
    }

    pub fn recip(&self) -> Self {
        let a0 = self.c[0];
        let mut b = [0.0; MAX_ORDER + 1];
        b[0] = 1.0 / a0;
        for k in 1..=self.order {
            let s: f64 = (1..=k).map(|i| self.c[i] * b[k - i]).sum();
            b[k] = -s / a0;
        }
        Jet {
            c: b,
            order: self.order,
            at: self.at,
        }
    }

    pub fn exp(&self) -> Self {
        let mut b = [0.0; MAX_ORDER + 1];
        b[0] = self.c[0].exp();
        for k in 1..=self.order {
            let s: f64 = (1..=k).map(|i| i as f64 * self.c[i] * b[k - i]).sum();
            b[k] = s / k as f64;
        }
        Jet {
            c: b,
            order: self.order,
            at: self.at,
        }
    }

    pub fn ln(&self) -> Self {
        let a0 = self.c[0];
        let mut b = [0.0; MAX_ORDER + 1];
        b[0] = a0.ln();
        for k in 1..=self.order {
            let s: f64 = (1..k).map(|i| i as f64 * b[i] * self.c[k - i]).sum();
            b[k] = (self.c[k] - s / k as f64) / a0;
        }
        Jet {
            c: b,
            order: self.order,
            at: self.at,
        }
    }

    pub fn powi(&self, p: u32) -> Self {
        let mut out = Jet::constant(1.0, self.at, self.order);
        for _ in 0..p {
            out = out * *self;
        }
        out
    }

    /// d/dr; loses one order.
    pub fn deriv(&self) -> Self {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let mut b = [0.0; MAX_ORDER + 1];
        for k in 0..self.order {
            b[k] = (k + 1) as f64 * self.c[k + 1];
        }
        Jet {
            c: b,
            order: self.order - 1,
            at: self.at,
        }
    }

    /// Antiderivative with the given value at the expansion point; gains one order.
    pub fn integrate(&self, value: f64) -> Self {
        let order = (self.order + 1).min(MAX_ORDER);
        let mut b = [0.0; MAX_ORDER + 1];
        b[0] = value;
        for k in 1..=order {
            b[k] = self.c[k - 1] / k as f64;
        }
        Jet {
            c: b,
            order,
            at: self.at,
        }
    }

    /// Division by the independent variable.
    ///
    /// At `r = 0` the numerator must vanish there (odd radial derivative); the quotient is
    /// its shifted series and the jet loses one order.
    pub fn div_var(&self) -> Self {
        if self.at != 0.0 {
            return *self * Jet::variable(self.at, self.order).recip();
        }
        assert!(self.order >= 1, "order-0 jet cannot be divided by r at the origin");
        let mut b = [0.0; MAX_ORDER + 1];
        b[..self.order].copy_from_slice(&self.c[1..=self.order]);
        Jet {
            c: b,
            order: self.order - 1,
            at: 0.0,
        }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let (order, at) = self.zip(&o);
        let mut c = [0.0; MAX_ORDER + 1];
        for k in 0..=order {
            c[k] = self.c[k] + o.c[k];
        }
        Jet { c, order, at }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let (order, at) = self.zip(&o);
        let mut c = [0.0; MAX_ORDER + 1];
        for k in 0..=order {
            c[k] = (0..=k).map(|i| self.c[i] * o.c[k - i]).sum();
        }
        Jet { c, order, at }
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, s: f64) -> Jet {
        self.scale(s)
    }
}
