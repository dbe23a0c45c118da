//! Ready-made models used by the examples, the test suites and the CLI.

use crate::functions::ScalarFn;
use crate::grid::UniformGrid;
use crate::model::{CoefficientSet, Interval, JumpAmplitude, JumpMeasureSpec};

fn audit() -> UniformGrid {
    UniformGrid { lo: -10.0, hi: 10.0, points: 2001 }
}

/// `b = 0`, `gamma = 1`, `h = e^{-z}`, `q(dz) = dz` on `(0, inf)`.
pub fn exp_jump(horizon: f64) -> CoefficientSet {
    CoefficientSet {
        drift: ScalarFn::zero(),
        rate: ScalarFn::constant(1.0),
        jump: JumpAmplitude::separable(ScalarFn::constant(1.0), ScalarFn::exp_decay(1.0, 1.0)),
        eta: ScalarFn::exp_decay(1.0, 1.0),
        measure: JumpMeasureSpec::lebesgue(Interval::new(0.0, f64::INFINITY), nested(horizon)),
        k: 2,
        p: 3.0,
        audit: audit(),
    }
}

/// Truncations `(0, horizon / 8)`, `(0, horizon / 4)`, `(0, horizon / 2)`, `(0, horizon)`.
pub fn nested(horizon: f64) -> Vec<Interval> {
    [8.0, 4.0, 2.0, 1.0].iter().map(|d| Interval::new(0.0, horizon / d)).collect()
}

/// `h(y, z) = -y 1_A(z) + y e^{-z} 1_{z > 1}` with `A = [0, 1]`, `q(A) = 1`.
///
/// Every jump with mark in `A` sends the state to exactly 0, so the law of
/// `X_t` carries an atom of mass `1 - e^{-t}` at the origin.
pub fn counterexample(horizon: f64) -> CoefficientSet {
    let on_a = ScalarFn::indicator(0.0, 1.0);
    let tail = ScalarFn::product(vec![ScalarFn::exp_decay(1.0, 1.0), ScalarFn::indicator(1.0, f64::INFINITY)]);
    CoefficientSet {
        drift: ScalarFn::zero(),
        rate: ScalarFn::constant(1.0),
        jump: JumpAmplitude {
            terms: vec![
                crate::model::JumpTerm { y: ScalarFn::affine(0.0, -1.0), z: on_a.clone() },
                crate::model::JumpTerm { y: ScalarFn::affine(0.0, 1.0), z: tail.clone() },
            ],
        },
        eta: ScalarFn::sum(vec![on_a, tail]),
        measure: JumpMeasureSpec::lebesgue(Interval::new(0.0, f64::INFINITY), nested(horizon)),
        k: 2,
        p: 3.0,
        audit: audit(),
    }
}

/// Counterexample with the collapsing jump `-y` softened to `-(1 - eps) y`.
pub fn regularized_counterexample(horizon: f64, eps: f64) -> CoefficientSet {
    let mut m = counterexample(horizon);
    m.jump.terms[0].y = ScalarFn::affine(0.0, -(1.0 - eps));
    m
}

/// `b = 0`, `gamma = 1`, `h = (1 + z)^{-m}`, `q(dz) = dz` on `(0, inf)`.
pub fn power_law(exponent: f64, horizon: f64) -> CoefficientSet {
    CoefficientSet {
        drift: ScalarFn::zero(),
        rate: ScalarFn::constant(1.0),
        jump: JumpAmplitude::separable(ScalarFn::constant(1.0), ScalarFn::power_law(1.0, exponent)),
        eta: ScalarFn::power_law(1.0, exponent),
        measure: JumpMeasureSpec::lebesgue(Interval::new(0.0, f64::INFINITY), nested(horizon)),
        k: 2,
        p: 3.0,
        audit: audit(),
    }
}

/// `b = 0`, `gamma = 1`, `h = z`, `q` uniform on `[0, 1]`.
pub fn uniform_jump() -> CoefficientSet {
    CoefficientSet {
        drift: ScalarFn::zero(),
        rate: ScalarFn::constant(1.0),
        jump: JumpAmplitude::separable(ScalarFn::constant(1.0), ScalarFn::affine(0.0, 1.0)),
        eta: ScalarFn::constant(1.0),
        measure: JumpMeasureSpec::lebesgue(Interval::new(0.0, 1.0), vec![Interval::new(0.0, 1.0)]),
        k: 2,
        p: 3.0,
        audit: audit(),
    }
}

/// `b = -0.5 sin y`, `gamma = 0.75 + 0.25 cos y`,
/// `h = 0.4 e^{-z} (1 + 0.3 tanh y)`, `q(dz) = dz` on `(0, 5]`.
pub fn smooth_oscillating() -> CoefficientSet {
    let phase = std::f64::consts::FRAC_PI_2;
    CoefficientSet {
        drift: ScalarFn::sinusoid(0.0, -0.5, 1.0, 0.0),
        rate: ScalarFn::sinusoid(0.75, 0.25, 1.0, phase),
        jump: JumpAmplitude::separable(
            ScalarFn::sum(vec![ScalarFn::constant(1.0), ScalarFn::tanh(0.3, 1.0)]),
            ScalarFn::exp_decay(0.4, 1.0),
        ),
        eta: ScalarFn::exp_decay(1.0, 1.0),
        measure: JumpMeasureSpec::lebesgue(Interval::new(0.0, 5.0), vec![Interval::new(0.0, 5.0)]),
        k: 2,
        p: 3.0,
        audit: audit(),
    }
}

/// `b = 0.3 cos y`, `gamma = 1 + 0.5 sin y`,
/// `h = 0.5 (1 + y^2)^{-1} (1 + z)^{-2}`, `q(dz) = dz` on `(0, inf)`.
pub fn smooth_lorentzian() -> CoefficientSet {
    let phase = std::f64::consts::FRAC_PI_2;
    CoefficientSet {
        drift: ScalarFn::sinusoid(0.0, 0.3, 1.0, phase),
        rate: ScalarFn::sinusoid(1.0, 0.5, 1.0, 0.0),
        jump: JumpAmplitude::separable(
            ScalarFn::Lorentzian { scale: 0.5, width: 1.0, exponent: 1.0 },
            ScalarFn::power_law(1.0, 2.0),
        ),
        eta: ScalarFn::power_law(1.0, 2.0),
        measure: JumpMeasureSpec::lebesgue(
            Interval::new(0.0, f64::INFINITY),
            vec![Interval::new(0.0, 5.0), Interval::new(0.0, 20.0)],
        ),
        k: 2,
        p: 3.0,
        audit: audit(),
    }
}
