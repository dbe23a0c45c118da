//! Gauss–Legendre rules, composite panels and half-line integration.

use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule on `[-1, 1]`, nodes by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let d = n as f64 * (x * p - p0) / (x * x - 1.0);
    (p, d)
}

/// Composite rule: a fixed Gauss–Legendre rule on each of a set of panels.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureSpec {
    pub panels: usize,
    pub nodes_per_panel: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { panels: 64, nodes_per_panel: 16 }
    }
}

impl QuadratureSpec {
    /// Nodes and weights over `[a, b]` split into equal panels.
    pub fn rule(&self, a: f64, b: f64) -> Vec<(f64, f64)> {
        let gl = GaussLegendre::new(self.nodes_per_panel);
        let width = (b - a) / self.panels as f64;
        let mut out = Vec::with_capacity(self.panels * self.nodes_per_panel);
        for p in 0..self.panels {
            let lo = a + p as f64 * width;
            out.extend(gl.mapped(lo, lo + width));
        }
        out
    }

    /// Nodes and weights over arbitrary breakpoints.
    pub fn rule_on(&self, breaks: &[f64]) -> Vec<(f64, f64)> {
        let gl = GaussLegendre::new(self.nodes_per_panel);
        breaks.windows(2).flat_map(|w| gl.mapped(w[0], w[1]).collect::<Vec<_>>()).collect()
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        if a == b {
            return 0.0;
        }
        if a.is_finite() && b.is_finite() {
            return self.rule(a, b).into_iter().map(|(x, w)| w * f(x)).sum();
        }
        if a.is_finite() {
            return self.half_line(a, 1.0, f);
        }
        if b.is_finite() {
            return self.half_line(b, -1.0, f);
        }
        self.half_line(0.0, 1.0, &mut f) + self.half_line(0.0, -1.0, &mut f)
    }

    /// `int_0^inf f(a + sign * s) ds` through `s = t / (1 - t)`.
    fn half_line<F: FnMut(f64) -> f64>(&self, a: f64, sign: f64, mut f: F) -> f64 {
        self.rule(0.0, 1.0)
            .into_iter()
            .map(|(t, w)| {
                let s = t / (1.0 - t);
                let jac = 1.0 / ((1.0 - t) * (1.0 - t));
                let v = f(a + sign * s);
                if v == 0.0 {
                    0.0
                } else {
                    w * v * jac
                }
            })
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_is_exact_for_polynomials() {
        let gl = GaussLegendre::new(8);
        // exact up to degree 15
        let v = gl.integrate(-1.0, 2.0, |x| x.powi(15) - 3.0 * x.powi(4));
        let exact = (2f64.powi(16) - 1.0) / 16.0 - 3.0 * (32.0 + 1.0) / 5.0;
        assert!((v - exact).abs() < 1e-10 * exact.abs());
        let wsum: f64 = gl.mapped(-1.0, 1.0).map(|(_, w)| w).sum();
        assert!((wsum - 2.0).abs() < 1e-14);
    }

    #[test]
    fn high_order_rule_nodes_are_symmetric_and_sorted() {
        let gl = GaussLegendre::new(64);
        let xs: Vec<f64> = gl.mapped(-1.0, 1.0).map(|(x, _)| x).collect();
        assert!(xs.windows(2).all(|w| w[1] > w[0]));
        for i in 0..32 {
            assert!((xs[i] + xs[63 - i]).abs() < 1e-14);
        }
    }

    #[test]
    fn half_line_integrals() {
        let q = QuadratureSpec::default();
        assert!((q.integrate(0.0, f64::INFINITY, |z| (-z).exp()) - 1.0).abs() < 1e-12);
        assert!((q.integrate(0.0, f64::INFINITY, |z| (1.0 + z).powi(-2)) - 1.0).abs() < 1e-12);
        assert!((q.integrate(0.0, f64::INFINITY, |z| (1.0 + z).powi(-6)) - 0.2).abs() < 1e-12);
        let g = q.integrate(f64::NEG_INFINITY, f64::INFINITY, |x| (-x * x / 2.0).exp());
        assert!((g - (2.0 * PI).sqrt()).abs() < 1e-10);
    }
}
