use jumplaw::functions::ScalarFn;
use jumplaw::grid::UniformGrid;
use jumplaw::model::{check_a, check_b, check_s, CoefficientSet, Interval, JumpAmplitude, JumpMeasureSpec};
use jumplaw::presets;
use jumplaw::quadrature::QuadratureSpec;
use jumplaw::Error;
use proptest::prelude::*;

fn grid(lo: f64, hi: f64, points: usize) -> UniformGrid {
    UniformGrid::new(lo, hi, points).unwrap()
}

fn half_line_model(jump: JumpAmplitude, eta: ScalarFn) -> CoefficientSet {
    let mut m = presets::exp_jump(100.0);
    m.jump = jump;
    m.eta = eta;
    m
}

#[test]
fn sine_exponential_jump_passes_a() {
    let m = half_line_model(
        JumpAmplitude::separable(ScalarFn::sinusoid(0.0, 1.0, 1.0, 0.0), ScalarFn::exp_decay(1.0, 1.0)),
        ScalarFn::exp_decay(1.0, 1.0),
    );
    let r = check_a(&m, &grid(-6.0, 6.0, 121), &grid(0.0, 10.0, 101), &QuadratureSpec::default()).unwrap();
    assert!(r.pass);
    assert!(r.witnesses["max_h_minus_eta"] <= 1e-12);
    assert!((r.witnesses["int_eta_dq"] - 1.0).abs() < 1e-10);
    assert!((r.witnesses["int_eta_p_dq"] - 1.0 / 3.0).abs() < 1e-10);
}

#[test]
fn unbounded_jump_fails_a_at_grid_edge() {
    let m = half_line_model(
        JumpAmplitude::separable(ScalarFn::affine(0.0, 1.0), ScalarFn::exp_decay(1.0, 1.0)),
        ScalarFn::exp_decay(1.0, 1.0),
    );
    let r = check_a(&m, &grid(-4.0, 4.0, 81), &grid(0.0, 5.0, 51), &QuadratureSpec::default()).unwrap();
    assert!(!r.pass);
    assert_eq!(r.worst_point.unwrap().y.abs(), 4.0);
}

#[test]
fn lorentzian_jump_integrals() {
    let mut m = half_line_model(
        JumpAmplitude::separable(
            ScalarFn::Lorentzian { scale: 1.0, width: 1.0, exponent: 1.0 },
            ScalarFn::power_law(1.0, 2.0),
        ),
        ScalarFn::power_law(1.0, 2.0),
    );
    // the second y-derivative of (1 + y^2)^{-1} reaches 2 at the origin, so
    // the domination holds for k = 1 only
    m.k = 1;
    m.p = 3.0;
    let r = check_a(&m, &grid(-5.0, 5.0, 101), &grid(0.0, 20.0, 201), &QuadratureSpec::default()).unwrap();
    assert!(r.pass, "{:?}", r.witnesses);
    assert!((r.witnesses["int_eta_dq"] - 1.0).abs() < 1e-9);
    assert!((r.witnesses["int_eta_p_dq"] - 0.2).abs() < 1e-9);
    m.k = 2;
    let r2 = check_a(&m, &grid(-5.0, 5.0, 101), &grid(0.0, 20.0, 201), &QuadratureSpec::default()).unwrap();
    assert!(!r2.pass);
}

#[test]
fn non_finite_coefficient_names_the_point() {
    let mut m = presets::exp_jump(100.0);
    m.drift = ScalarFn::power_law(1.0, 1.0);
    match check_a(&m, &grid(-1.0, 1.0, 5), &grid(0.0, 1.0, 3), &QuadratureSpec::default()) {
        Err(Error::InvalidModel(msg)) => assert!(msg.contains("y = -1"), "{msg}"),
        other => panic!("expected an invalid-model error, got {other:?}"),
    }
}

#[test]
fn s_for_sine_jump_away_from_the_origin() {
    let m = half_line_model(
        JumpAmplitude::separable(ScalarFn::sinusoid(0.0, 1.0, 1.0, 0.0), ScalarFn::exp_decay(1.0, 1.0)),
        ScalarFn::exp_decay(1.0, 1.0),
    );
    let r = check_s(&m, &grid(-4.0, 4.0, 801), &grid(0.1, 5.0, 50), 1e-8).unwrap();
    let c0 = r.witnesses["c0"];
    let bound = 1.0 - (-0.1f64).exp();
    assert!(r.pass);
    assert!(c0 >= bound - 1e-12 && c0 < bound + 1e-3, "c0 = {c0}");
}

#[test]
fn s_fails_for_collapsing_jump() {
    let m = presets::counterexample(100.0);
    let r = check_s(&m, &grid(-2.0, 2.0, 21), &grid(0.0, 3.0, 31), 1e-8).unwrap();
    assert!(!r.pass);
    assert_eq!(r.witnesses["c0"], 0.0);
    let p = r.worst_point.unwrap();
    assert!(p.z.unwrap() <= 1.0);
}

#[test]
fn s_is_one_for_state_independent_jump() {
    let m = presets::exp_jump(100.0);
    let r = check_s(&m, &grid(-2.0, 2.0, 21), &grid(0.0, 3.0, 31), 1e-8).unwrap();
    assert_eq!(r.witnesses["c0"], 1.0);
    assert!(r.pass);
}

#[test]
fn unit_slope_gives_constant_b_bound() {
    let m = half_line_model(
        JumpAmplitude::separable(ScalarFn::constant(1.0), ScalarFn::affine(0.0, 1.0)),
        ScalarFn::constant(1.0),
    );
    let r = check_b(&m, 2, 3.0, 0.1, 12, &grid(-3.0, 3.0, 13), &QuadratureSpec::default()).unwrap();
    assert!(r.pass);
    for row in &r.table {
        assert!((row[1] - 1.0).abs() < 1e-12, "n = {}: {}", row[0], row[1]);
    }
    assert!((r.witnesses["fitted_c"] - (-0.1f64).exp()).abs() < 1e-12);
}

#[test]
fn power_law_slope_passes_b_for_small_theta() {
    let m = presets::power_law(2.0, 100.0);
    let r = check_b(&m, 2, 3.0, 0.3, 60, &grid(-2.0, 2.0, 5), &QuadratureSpec::default()).unwrap();
    assert!(r.pass, "{:?}", r.witnesses);
    // polynomial growth of the bound: the fitted rate shrinks as n grows
    assert!(r.witnesses["tail_growth_rate"] < 0.3);
}

#[test]
fn exponential_slope_needs_theta_two_k() {
    let m = presets::exp_jump(100.0);
    let y = grid(-1.0, 1.0, 3);
    let quad = QuadratureSpec::default();
    let loose = check_b(&m, 2, 3.0, 4.0, 20, &y, &quad).unwrap();
    assert!(loose.pass, "{:?}", loose.witnesses);
    let tight = check_b(&m, 2, 3.0, 3.0, 20, &y, &quad).unwrap();
    assert!(!tight.pass);
    // (1/n) int_0^n e^{4z} dz = (e^{4n} - 1) / (4n)
    let n: f64 = 5.0;
    let expect = ((4.0 * n).exp() - 1.0) / (4.0 * n);
    assert!((loose.table[4][1] - expect).abs() / expect < 1e-9);
}

#[test]
fn super_exponential_slope_fails_b_for_every_theta() {
    let mut m = half_line_model(
        JumpAmplitude::separable(ScalarFn::constant(1.0), ScalarFn::StretchedExp { scale: 1.0, rate: 1.0, power: 2.0 }),
        ScalarFn::StretchedExp { scale: 1.0, rate: 1.0, power: 2.0 },
    );
    m.measure = JumpMeasureSpec::lebesgue(
        Interval::new(0.5, f64::INFINITY),
        vec![Interval::new(0.5, 10.0), Interval::new(0.5, 100.0)],
    );
    for theta in [1.0, 10.0, 20.0] {
        let r = check_b(&m, 1, 3.0, theta, 12, &grid(-1.0, 1.0, 3), &QuadratureSpec::default()).unwrap();
        assert!(!r.pass, "theta = {theta}: {:?}", r.witnesses);
    }
}

#[test]
fn vanishing_slope_is_degenerate() {
    let m = presets::counterexample(100.0);
    let r = check_b(&m, 2, 3.0, 1.0, 4, &grid(-1.0, 1.0, 3), &QuadratureSpec::default());
    assert!(matches!(r, Err(Error::DegenerateKernel(_))), "{r:?}");
}

#[test]
fn checks_are_pure() {
    let m = presets::smooth_lorentzian();
    let (y, z) = (grid(-3.0, 3.0, 31), grid(0.0, 5.0, 26));
    let a = serde_json::to_string(&check_a(&m, &y, &z, &QuadratureSpec::default()).unwrap()).unwrap();
    let b = serde_json::to_string(&check_a(&m, &y, &z, &QuadratureSpec::default()).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn truncations_must_nest() {
    let mut spec = JumpMeasureSpec::lebesgue(
        Interval::new(0.0, f64::INFINITY),
        vec![Interval::new(0.0, 2.0), Interval::new(1.0, 3.0)],
    );
    assert!(matches!(spec.validate(), Err(Error::InvalidModel(_))));
    spec.truncations = vec![Interval::new(0.0, 2.0), Interval::new(0.0, 3.0)];
    spec.validate().unwrap();
    assert!((spec.truncation_mass(2).unwrap() - 3.0).abs() < 1e-12);
    assert!(matches!(spec.truncation(3), Err(Error::Config(_))));
    spec.truncations.push(Interval::new(0.0, f64::INFINITY));
    assert!(spec.validate().is_err());
}

#[test]
fn model_validation_bounds_orders() {
    let mut m = presets::exp_jump(10.0);
    m.k = 7;
    assert!(m.validate().is_err());
    m.k = 2;
    m.p = 2.5;
    assert!(m.validate().is_err());
}

#[test]
fn preset_round_trips_through_toml() {
    let m = presets::counterexample(50.0);
    let text = toml::to_string(&m).unwrap();
    let back: CoefficientSet = toml::from_str(&text).unwrap();
    assert_eq!(back, m);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    // With c_0 from check_s, y -> y + h(y, z) increases by at least c_0 / 2 per unit.
    #[test]
    fn jump_map_is_increasing_under_s(z in 0.0f64..5.0) {
        let m = presets::smooth_oscillating();
        let y = grid(-6.0, 6.0, 241);
        let r = check_s(&m, &y, &grid(0.0, 5.0, 51), 1e-8).unwrap();
        let c0 = r.witnesses["c0"];
        prop_assert!(r.pass);
        let nodes = y.nodes();
        let dy = y.spacing();
        for w in nodes.windows(2) {
            let step = (w[1] + m.jump.value(w[1], z)) - (w[0] + m.jump.value(w[0], z));
            prop_assert!(step >= 0.5 * c0 * dy);
        }
    }
}
