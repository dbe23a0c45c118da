//! Closed catalogue of univariate coefficient families.
//!
//! Each family has a direct `value` path (used in the Monte Carlo hot loops)
//! and a jet path that yields exact derivative stacks to any order up to
//! [`MAX_ORDER`](crate::jet::MAX_ORDER).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Jet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ScalarFn {
    Const {
        value: f64,
    },
    /// `intercept + slope * x`
    Affine {
        intercept: f64,
        slope: f64,
    },
    /// `scale * exp(-rate * x)`
    ExpDecay {
        scale: f64,
        rate: f64,
    },
    /// `scale * exp(-rate * x^power)` on `x >= 0`.
    StretchedExp {
        scale: f64,
        rate: f64,
        power: f64,
    },
    /// `scale * (1 + x)^(-exponent)` on `x > -1`.
    PowerLaw {
        scale: f64,
        exponent: f64,
    },
    /// `scale * (1 + (x / width)^2)^(-exponent)`
    Lorentzian {
        scale: f64,
        width: f64,
        exponent: f64,
    },
    /// `offset + amplitude * sin(frequency * x + phase)`
    Sinusoid {
        #[serde(default)]
        offset: f64,
        amplitude: f64,
        #[serde(default = "one")]
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `scale * tanh(slope * x)`
    Tanh {
        scale: f64,
        #[serde(default = "one")]
        slope: f64,
    },
    /// `1` on the closed interval `[lo, hi]`, `0` elsewhere.
    Indicator {
        lo: f64,
        hi: f64,
    },
    Spline(CubicSpline),
    Sum {
        terms: Vec<ScalarFn>,
    },
    Product {
        factors: Vec<ScalarFn>,
    },
}

fn one() -> f64 {
    1.0
}

impl ScalarFn {
    pub fn constant(value: f64) -> Self {
        ScalarFn::Const { value }
    }

    pub fn zero() -> Self {
        ScalarFn::Const { value: 0.0 }
    }

    pub fn affine(intercept: f64, slope: f64) -> Self {
        ScalarFn::Affine { intercept, slope }
    }

    pub fn exp_decay(scale: f64, rate: f64) -> Self {
        ScalarFn::ExpDecay { scale, rate }
    }

    pub fn power_law(scale: f64, exponent: f64) -> Self {
        ScalarFn::PowerLaw { scale, exponent }
    }

    pub fn sinusoid(offset: f64, amplitude: f64, frequency: f64, phase: f64) -> Self {
        ScalarFn::Sinusoid { offset, amplitude, frequency, phase }
    }

    pub fn tanh(scale: f64, slope: f64) -> Self {
        ScalarFn::Tanh { scale, slope }
    }

    pub fn indicator(lo: f64, hi: f64) -> Self {
        ScalarFn::Indicator { lo, hi }
    }

    pub fn product(factors: Vec<ScalarFn>) -> Self {
        ScalarFn::Product { factors }
    }

    pub fn sum(terms: Vec<ScalarFn>) -> Self {
        ScalarFn::Sum { terms }
    }

    /// True when the function is the constant zero.
    pub fn is_zero(&self) -> bool {
        matches!(self, ScalarFn::Const { value } if *value == 0.0)
    }

    /// True when every derivative of order >= 1 vanishes identically.
    pub fn is_constant(&self) -> bool {
        match self {
            ScalarFn::Const { .. } => true,
            ScalarFn::Affine { slope, .. } => *slope == 0.0,
            ScalarFn::Sum { terms } => terms.iter().all(ScalarFn::is_constant),
            ScalarFn::Product { factors } => {
                factors.iter().any(ScalarFn::is_zero) || factors.iter().all(ScalarFn::is_constant)
            }
            _ => false,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match self {
            ScalarFn::Const { value } => *value,
            ScalarFn::Affine { intercept, slope } => intercept + slope * x,
            ScalarFn::ExpDecay { scale, rate } => scale * (-rate * x).exp(),
            ScalarFn::StretchedExp { scale, rate, power } => {
                if x < 0.0 {
                    f64::NAN
                } else {
                    scale * (-rate * x.powf(*power)).exp()
                }
            }
            ScalarFn::PowerLaw { scale, exponent } => {
                if x <= -1.0 {
                    f64::NAN
                } else {
                    scale * (1.0 + x).powf(-exponent)
                }
            }
            ScalarFn::Lorentzian { scale, width, exponent } => {
                let r = x / width;
                scale * (1.0 + r * r).powf(-exponent)
            }
            ScalarFn::Sinusoid { offset, amplitude, frequency, phase } => {
                offset + amplitude * (frequency * x + phase).sin()
            }
            ScalarFn::Tanh { scale, slope } => scale * (slope * x).tanh(),
            ScalarFn::Indicator { lo, hi } => {
                if x >= *lo && x <= *hi {
                    1.0
                } else {
                    0.0
                }
            }
            ScalarFn::Spline(s) => s.value(x),
            ScalarFn::Sum { terms } => terms.iter().map(|t| t.value(x)).sum(),
            ScalarFn::Product { factors } => factors.iter().map(|t| t.value(x)).product(),
        }
    }

    /// Evaluates the function composed with the jet `x`.
    pub fn eval_jet(&self, x: &Jet) -> Jet {
        let n = x.order();
        match self {
            ScalarFn::Const { value } => Jet::constant(*value, n),
            ScalarFn::Affine { intercept, slope } => x.scale(*slope).add_const(*intercept),
            ScalarFn::ExpDecay { scale, rate } => x.scale(-rate).exp().scale(*scale),
            ScalarFn::StretchedExp { scale, rate, power } => {
                if x.value() < 0.0 {
                    return Jet::constant(f64::NAN, n);
                }
                x.powf(*power).scale(-rate).exp().scale(*scale)
            }
            ScalarFn::PowerLaw { scale, exponent } => {
                if x.value() <= -1.0 {
                    return Jet::constant(f64::NAN, n);
                }
                x.add_const(1.0).powf(-exponent).scale(*scale)
            }
            ScalarFn::Lorentzian { scale, width, exponent } => {
                let r = x.scale(1.0 / width);
                (r * r).add_const(1.0).powf(-exponent).scale(*scale)
            }
            ScalarFn::Sinusoid { offset, amplitude, frequency, phase } => {
                let (s, _) = x.scale(*frequency).add_const(*phase).sin_cos();
                s.scale(*amplitude).add_const(*offset)
            }
            ScalarFn::Tanh { scale, slope } => x.scale(*slope).tanh().scale(*scale),
            ScalarFn::Indicator { .. } => Jet::constant(self.value(x.value()), n),
            ScalarFn::Spline(s) => s.eval_jet(x),
            ScalarFn::Sum { terms } => terms.iter().fold(Jet::constant(0.0, n), |acc, t| acc + t.eval_jet(x)),
            ScalarFn::Product { factors } => factors.iter().fold(Jet::constant(1.0, n), |acc, t| acc * t.eval_jet(x)),
        }
    }

    /// Derivatives `f^{(l)}(x)` for `l = 0..=order`.
    pub fn derivatives(&self, x: f64, order: usize) -> Vec<f64> {
        self.eval_jet(&Jet::variable(x, order)).derivatives()
    }

    /// Points where the function may fail to be smooth (indicator edges).
    pub fn breakpoints(&self) -> Vec<f64> {
        match self {
            ScalarFn::Indicator { lo, hi } => vec![*lo, *hi],
            ScalarFn::Sum { terms: fs } | ScalarFn::Product { factors: fs } => {
                fs.iter().flat_map(ScalarFn::breakpoints).collect()
            }
            _ => Vec::new(),
        }
    }

    /// First derivative only.
    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            ScalarFn::Const { .. } | ScalarFn::Indicator { .. } => 0.0,
            ScalarFn::Affine { slope, .. } => *slope,
            ScalarFn::ExpDecay { scale, rate } => -rate * scale * (-rate * x).exp(),
            ScalarFn::Sinusoid { amplitude, frequency, phase, .. } => {
                amplitude * frequency * (frequency * x + phase).cos()
            }
            _ => self.derivatives(x, 1)[1],
        }
    }
}

/// Natural cubic spline through tabulated values, extended linearly beyond
/// the end knots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SplineTable", into = "SplineTable")]
pub struct CubicSpline {
    knots: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplineTable {
    pub knots: Vec<f64>,
    pub values: Vec<f64>,
}

impl TryFrom<SplineTable> for CubicSpline {
    type Error = Error;
    fn try_from(t: SplineTable) -> Result<Self> {
        CubicSpline::new(t.knots, t.values)
    }
}

impl From<CubicSpline> for SplineTable {
    fn from(s: CubicSpline) -> Self {
        SplineTable { knots: s.knots, values: s.values }
    }
}

impl CubicSpline {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = knots.len();
        if n < 3 || values.len() != n {
            return Err(Error::InvalidModel(format!(
                "spline needs >= 3 knots and matching values (got {} knots, {} values)",
                n,
                values.len()
            )));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidModel("spline knots must be strictly increasing".into()));
        }
        // Tridiagonal system for the second derivatives, natural ends.
        let mut second = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        let mut upper = vec![0.0; n];
        diag[0] = 1.0;
        diag[n - 1] = 1.0;
        for i in 1..n - 1 {
            let h0 = knots[i] - knots[i - 1];
            let h1 = knots[i + 1] - knots[i];
            diag[i] = 2.0 * (h0 + h1);
            upper[i] = h1;
            rhs[i] = 6.0 * ((values[i + 1] - values[i]) / h1 - (values[i] - values[i - 1]) / h0);
        }
        // Thomas sweep; lower[i] = h0 for interior rows.
        for i in 1..n {
            let lower = if i < n - 1 { knots[i] - knots[i - 1] } else { 0.0 };
            let m = lower / diag[i - 1];
            diag[i] -= m * upper[i - 1];
            rhs[i] -= m * rhs[i - 1];
        }
        second[n - 1] = rhs[n - 1] / diag[n - 1];
        for i in (0..n - 1).rev() {
            second[i] = (rhs[i] - upper[i] * second[i + 1]) / diag[i];
        }
        Ok(CubicSpline { knots, values, second })
    }

    /// Polynomial coefficients of the piece used at `x`, in powers of `x - base`.
    fn piece(&self, x: f64) -> (f64, [f64; 4]) {
        let n = self.knots.len();
        let (k, v, m) = (&self.knots, &self.values, &self.second);
        if x <= k[0] {
            let h = k[1] - k[0];
            let slope = (v[1] - v[0]) / h - h * (2.0 * m[0] + m[1]) / 6.0;
            return (k[0], [v[0], slope, 0.0, 0.0]);
        }
        if x >= k[n - 1] {
            let h = k[n - 1] - k[n - 2];
            let slope = (v[n - 1] - v[n - 2]) / h + h * (m[n - 2] + 2.0 * m[n - 1]) / 6.0;
            return (k[n - 1], [v[n - 1], slope, 0.0, 0.0]);
        }
        let i = match k.binary_search_by(|p| p.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(n - 2),
            Err(i) => i - 1,
        };
        let h = k[i + 1] - k[i];
        let c1 = (v[i + 1] - v[i]) / h - h * (2.0 * m[i] + m[i + 1]) / 6.0;
        let c2 = m[i] / 2.0;
        let c3 = (m[i + 1] - m[i]) / (6.0 * h);
        (k[i], [v[i], c1, c2, c3])
    }

    pub fn value(&self, x: f64) -> f64 {
        let (base, c) = self.piece(x);
        let t = x - base;
        c[0] + t * (c[1] + t * (c[2] + t * c[3]))
    }

    pub fn eval_jet(&self, x: &Jet) -> Jet {
        let (base, c) = self.piece(x.value());
        let t = x.add_const(-base);
        let n = x.order();
        let mut acc = Jet::constant(c[3], n);
        for coef in [c[2], c[1], c[0]] {
            acc = (acc * t).add_const(coef);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jet_and_value_paths_agree() {
        let fns = vec![
            ScalarFn::affine(0.5, -2.0),
            ScalarFn::exp_decay(2.0, 0.7),
            ScalarFn::StretchedExp { scale: 1.0, rate: 0.5, power: 1.5 },
            ScalarFn::power_law(1.0, 2.0),
            ScalarFn::Lorentzian { scale: 1.0, width: 1.0, exponent: 1.0 },
            ScalarFn::sinusoid(0.5, 0.4, 1.3, 0.2),
            ScalarFn::tanh(0.5, 2.0),
            ScalarFn::product(vec![ScalarFn::exp_decay(1.0, 1.0), ScalarFn::indicator(0.0, 3.0)]),
            ScalarFn::sum(vec![ScalarFn::affine(0.0, 1.0), ScalarFn::constant(2.0)]),
        ];
        for f in &fns {
            for x in [0.1, 0.9, 2.5] {
                let d = f.derivatives(x, 3);
                assert!((d[0] - f.value(x)).abs() < 1e-13, "{f:?} at {x}");
                let h = 1e-5;
                let fd = (f.value(x + h) - f.value(x - h)) / (2.0 * h);
                assert!((d[1] - fd).abs() < 1e-6 * (1.0 + fd.abs()), "{f:?} at {x}: {} vs {fd}", d[1]);
                assert!((f.derivative(x) - d[1]).abs() < 1e-12 * (1.0 + d[1].abs()));
            }
        }
    }

    #[test]
    fn spline_reproduces_knots_and_is_c2() {
        let knots: Vec<f64> = (0..8).map(|i| i as f64 * 0.5).collect();
        let values: Vec<f64> = knots.iter().map(|x| x.sin()).collect();
        let s = CubicSpline::new(knots.clone(), values.clone()).unwrap();
        for (x, v) in knots.iter().zip(&values) {
            assert!((s.value(*x) - v).abs() < 1e-12);
        }
        let f = ScalarFn::Spline(s);
        let left = f.derivatives(1.0 - 1e-9, 2);
        let right = f.derivatives(1.0 + 1e-9, 2);
        assert!((left[1] - right[1]).abs() < 1e-6);
        assert!((left[2] - right[2]).abs() < 1e-6);
        // natural end: zero curvature, linear extension.
        assert!(f.derivatives(-1.0, 2)[2].abs() < 1e-14);
    }

    #[test]
    fn spline_deserializes_from_table() {
        let f: ScalarFn =
            toml::from_str("family = \"spline\"\nknots = [0.0, 1.0, 2.0]\nvalues = [0.0, 1.0, 0.0]").unwrap();
        assert!((f.value(1.0) - 1.0).abs() < 1e-14);
        let bad: std::result::Result<ScalarFn, _> =
            toml::from_str("family = \"spline\"\nknots = [0.0, 0.0, 2.0]\nvalues = [0.0, 1.0, 0.0]");
        assert!(bad.is_err());
    }
}
