//! Truncated Taylor arithmetic.
//!
//! A [`Jet`] holds the Taylor coefficients `c[0..=order]` of a function at a
//! point, so that `f^{(l)}(x) = l! * c[l]`. Every preset function in the
//! catalogue is evaluated through jets, which gives exact derivative stacks
//! without numerical differentiation.

use std::ops::{Add, Mul, Neg, Sub};

/// Largest supported derivative order.
pub const MAX_ORDER: usize = 9;

const LEN: usize = MAX_ORDER + 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    c: [f64; LEN],
    order: usize,
}

impl Jet {
    pub fn constant(value: f64, order: usize) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let mut c = [0.0; LEN];
        c[0] = value;
        Jet { c, order }
    }

    /// The independent variable at `x`.
    pub fn variable(x: f64, order: usize) -> Self {
        let mut j = Jet::constant(x, order);
        if order >= 1 {
            j.c[1] = 1.0;
        }
        j
    }

    pub fn from_coeffs(coeffs: &[f64]) -> Self {
        assert!(!coeffs.is_empty() && coeffs.len() <= LEN);
        let mut c = [0.0; LEN];
        c[..coeffs.len()].copy_from_slice(coeffs);
        Jet { c, order: coeffs.len() - 1 }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn value(&self) -> f64 {
        self.c[0]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.c[..=self.order]
    }

    /// Derivatives `f^{(l)}` for `l = 0..=order`.
    pub fn derivatives(&self) -> Vec<f64> {
        let mut fact = 1.0;
        (0..=self.order)
            .map(|l| {
                if l > 0 {
                    fact *= l as f64;
                }
                self.c[l] * fact
            })
            .collect()
    }

    pub fn scale(mut self, s: f64) -> Self {
        for v in &mut self.c[..=self.order] {
            *v *= s;
        }
        self
    }

    pub fn add_const(mut self, s: f64) -> Self {
        self.c[0] += s;
        self
    }

    /// Applies a univariate function given its own Taylor expansion
    /// `g(c0 + t) = sum_j gt[j] t^j` around the base value.
    pub fn compose_taylor(&self, gt: &[f64]) -> Self {
        let n = self.order;
        let mut out = Jet::constant(gt[0], n);
        let mut shifted = *self;
        shifted.c[0] = 0.0;
        let mut power = Jet::constant(1.0, n);
        for g in gt.iter().take(n + 1).skip(1) {
            power = power * shifted;
            for l in 0..=n {
                out.c[l] += g * power.c[l];
            }
        }
        out
    }

    pub fn exp(&self) -> Self {
        let n = self.order;
        let mut e = Jet::constant(self.c[0].exp(), n);
        for k in 1..=n {
            let mut s = 0.0;
            for j in 1..=k {
                s += j as f64 * self.c[j] * e.c[k - j];
            }
            e.c[k] = s / k as f64;
        }
        e
    }

    pub fn ln(&self) -> Self {
        let n = self.order;
        let a0 = self.c[0];
        let mut l = Jet::constant(a0.ln(), n);
        for k in 1..=n {
            let mut s = 0.0;
            for j in 1..k {
                s += j as f64 * l.c[j] * self.c[k - j];
            }
            l.c[k] = (self.c[k] - s / k as f64) / a0;
        }
        l
    }

    /// Returns `(sin, cos)` of the jet.
    pub fn sin_cos(&self) -> (Self, Self) {
        let n = self.order;
        let (s0, c0) = self.c[0].sin_cos();
        let mut s = Jet::constant(s0, n);
        let mut c = Jet::constant(c0, n);
        for k in 1..=n {
            let mut ss = 0.0;
            let mut cc = 0.0;
            for j in 1..=k {
                let w = j as f64 * self.c[j];
                ss += w * c.c[k - j];
                cc -= w * s.c[k - j];
            }
            s.c[k] = ss / k as f64;
            c.c[k] = cc / k as f64;
        }
        (s, c)
    }

    pub fn tanh(&self) -> Self {
        let n = self.order;
        let t0 = self.c[0].tanh();
        let mut t = Jet::constant(t0, n);
        // u = 1 - t^2 satisfies t' = u a'.
        let mut u = [0.0; LEN];
        u[0] = 1.0 - t0 * t0;
        for k in 1..=n {
            let mut s = 0.0;
            for j in 1..=k {
                s += j as f64 * self.c[j] * u[k - j];
            }
            t.c[k] = s / k as f64;
            let mut tt = 0.0;
            for j in 0..=k {
                tt += t.c[j] * t.c[k - j];
            }
            u[k] = -tt;
        }
        t
    }

    /// `self^alpha` for a positive base value.
    pub fn powf(&self, alpha: f64) -> Self {
        let n = self.order;
        let a0 = self.c[0];
        let mut p = Jet::constant(a0.powf(alpha), n);
        for k in 1..=n {
            let mut s = 0.0;
            for j in 1..=k {
                s += ((alpha + 1.0) * j as f64 - k as f64) * self.c[j] * p.c[k - j];
            }
            p.c[k] = s / (k as f64 * a0);
        }
        p
    }

    pub fn recip(&self) -> Self {
        Jet::constant(1.0, self.order).div(self)
    }

    pub fn div(&self, rhs: &Jet) -> Self {
        let n = self.order.min(rhs.order);
        let b0 = rhs.c[0];
        let mut q = Jet::constant(0.0, n);
        for k in 0..=n {
            let mut s = self.c[k];
            for j in 1..=k {
                s -= rhs.c[j] * q.c[k - j];
            }
            q.c[k] = s / b0;
        }
        q
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Jet) -> Jet {
        let n = self.order.min(rhs.order);
        self.order = n;
        for l in 0..=n {
            self.c[l] += rhs.c[l];
        }
        for v in &mut self.c[n + 1..] {
            *v = 0.0;
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        self + (-rhs)
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
    fn mul(self, rhs: Jet) -> Jet {
        let n = self.order.min(rhs.order);
        let mut out = Jet::constant(0.0, n);
        for k in 0..=n {
            let mut s = 0.0;
            for j in 0..=k {
                s += self.c[j] * rhs.c[k - j];
            }
            out.c[k] = s;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * (1.0 + b.abs())
    }

    #[test]
    fn exp_of_variable_gives_all_ones() {
        let d = Jet::variable(0.0, 6).exp().derivatives();
        assert!(d.iter().all(|&v| close(v, 1.0)));
    }

    #[test]
    fn sin_derivatives_cycle() {
        let x = 0.7;
        let d = Jet::variable(x, 5).sin_cos().0.derivatives();
        let expect = [x.sin(), x.cos(), -x.sin(), -x.cos(), x.sin(), x.cos()];
        for (a, b) in d.iter().zip(expect) {
            assert!(close(*a, b));
        }
    }

    #[test]
    fn ln_and_exp_invert() {
        let j = Jet::variable(1.3, 7).sin_cos().1.add_const(2.0);
        let back = j.ln().exp();
        for (a, b) in back.coeffs().iter().zip(j.coeffs()) {
            assert!(close(*a, *b));
        }
    }

    #[test]
    fn powf_matches_closed_form() {
        // (1+x)^-2 at x = 0.5: derivatives (-2)(-3)...(1.5)^(-2-l)
        let d = Jet::variable(0.5, 4).add_const(1.0).powf(-2.0).derivatives();
        let mut coef = 1.0;
        for (l, v) in d.iter().enumerate() {
            let expect = coef * 1.5f64.powf(-2.0 - l as f64);
            assert!(close(*v, expect), "l={l}: {v} vs {expect}");
            coef *= -2.0 - l as f64;
        }
    }

    #[test]
    fn tanh_derivative_identity() {
        let x = -0.4;
        let d = Jet::variable(x, 3).tanh().derivatives();
        let t = x.tanh();
        assert!(close(d[1], 1.0 - t * t));
        assert!(close(d[2], -2.0 * t * (1.0 - t * t)));
    }

    #[test]
    fn division_matches_product_inverse() {
        let a = Jet::variable(0.3, 5).exp();
        let b = Jet::variable(0.3, 5).add_const(2.0);
        let q = a.div(&b);
        let back = q * b;
        for (x, y) in back.coeffs().iter().zip(a.coeffs()) {
            assert!(close(*x, *y));
        }
    }
}
