use jumplaw::fokker_planck::{
    apply_adjoint, duality_pair, evolve, evolve_checkpoints, picard, sobolev_norm, stack_consistency, AdjointOperator,
    EvolutionConfig, GridDensity,
};
use jumplaw::functions::ScalarFn;
use jumplaw::grid::UniformGrid;
use jumplaw::model::CoefficientSet;
use jumplaw::presets;
use jumplaw::Error;
use proptest::prelude::*;
use std::sync::OnceLock;

fn stable(coeffs: &CoefficientSet, i: usize) -> EvolutionConfig {
    let mut cfg = EvolutionConfig::new(i, 1.0);
    cfg.dt = cfg.max_stable_dt(coeffs).unwrap();
    cfg
}

fn moments(f: &GridDensity) -> (f64, f64, f64) {
    let nodes = f.grid.nodes();
    let m0 = f.mass();
    let m1 = f.grid.trapezoid(&nodes.iter().zip(&f.values[0]).map(|(y, v)| y * v).collect::<Vec<_>>()) / m0;
    let m2 = f.grid.trapezoid(&nodes.iter().zip(&f.values[0]).map(|(y, v)| y * y * v).collect::<Vec<_>>()) / m0;
    (m0, m1, m2 - m1 * m1)
}

fn normal_pdf(y: f64, mean: f64, std: f64) -> f64 {
    let r = (y - mean) / std;
    (-0.5 * r * r).exp() / (std * (2.0 * std::f64::consts::PI).sqrt())
}

#[test]
fn mass_is_conserved() {
    let m = presets::smooth_oscillating();
    let grid = UniformGrid::new(-8.0, 8.0, 2048).unwrap();
    let f0 = GridDensity::gaussian(&grid, 0.0, 1.0, 2);
    let f = evolve(&m, &f0, 0.5, &stable(&m, 50)).unwrap();
    assert!((f.mass() - 1.0).abs() < 1e-6, "{}", f.mass());
    assert_eq!(f.time, 0.5);
}

#[test]
fn generator_duality() {
    let m = presets::smooth_oscillating();
    let grid = UniformGrid::new(-8.0, 10.0, 1801).unwrap();
    let g = GridDensity::gaussian(&grid, 0.5, 0.7, 0);
    let cfg = stable(&m, 50);
    let op = AdjointOperator::new(&m, &grid, 0, &cfg).unwrap();
    let tests: [(&str, &dyn Fn(f64) -> f64); 5] =
        [("1", &|_| 1.0), ("y", &|y| y), ("y^2", &|y| y * y), ("sin", &f64::sin), ("cos", &|y| (0.5 * y).cos())];
    for (name, phi) in tests {
        let (lhs, rhs) = duality_pair(&m, &g, &op, &cfg, phi).unwrap();
        assert!((lhs - rhs).abs() < 1e-6, "{name}: {lhs} vs {rhs}");
    }
}

#[test]
fn poissonized_constant_drift_is_a_poisson_mixture() {
    // gamma = 0, b = beta: f(t) = sum_K P(K; i t) g0(. - beta K / i)
    let (beta, i, t) = (0.8, 10usize, 0.5);
    let mut m = presets::uniform_jump();
    m.rate = ScalarFn::zero();
    m.drift = ScalarFn::constant(beta);
    let grid = UniformGrid::new(-6.0, 8.0, 1401).unwrap();
    let f0 = GridDensity::gaussian(&grid, 0.0, 0.6, 0);
    let mut cfg = stable(&m, i);
    cfg.dt /= 20.0;
    let f = evolve(&m, &f0, t, &cfg).unwrap();
    let lambda = i as f64 * t;
    let mut err = vec![0.0; grid.points];
    for (j, y) in grid.nodes().into_iter().enumerate() {
        let mut p = (-lambda).exp();
        let mut exact = 0.0;
        for k in 0..60 {
            if k > 0 {
                p *= lambda / k as f64;
            }
            exact += p * normal_pdf(y - beta * k as f64 / i as f64, 0.0, 0.6);
        }
        err[j] = f.values[0][j] - exact;
    }
    let l1 = grid.trapezoid_abs(&err);
    assert!(l1 < 2e-3, "L1 = {l1}");
}

#[test]
fn compound_poisson_moments() {
    // b = 0, gamma = 1, h = z with z ~ U[0, 1]: mean grows by t / 2, variance by t / 3
    let m = presets::uniform_jump();
    let grid = UniformGrid::new(-6.0, 8.0, 1401).unwrap();
    let f0 = GridDensity::gaussian(&grid, 0.0, 0.5, 1);
    let t = 1.0;
    // Euler biases the second moment by about dt t / 4
    let mut cfg = stable(&m, 20);
    cfg.dt /= 10.0;
    let f = evolve(&m, &f0, t, &cfg).unwrap();
    let (mass, mean, var) = moments(&f);
    assert!((mass - 1.0).abs() < 1e-8);
    assert!((mean - 0.5 * t).abs() < 1e-3, "{mean}");
    assert!((var - (0.25 + t / 3.0)).abs() < 1e-3, "{var}");
    assert!(stack_consistency(&f)[0] < 0.05);
}

#[test]
fn picard_agrees_with_euler() {
    let m = presets::smooth_lorentzian();
    let grid = UniformGrid::new(-7.0, 9.0, 801).unwrap();
    let f0 = GridDensity::gaussian(&grid, 0.0, 1.0, 1);
    let mut cfg = stable(&m, 20);
    cfg.dt /= 4.0;
    let t = 0.1;
    let e = evolve(&m, &f0, t, &cfg).unwrap();
    let p = picard(&m, &f0, t, &cfg, 8, 200).unwrap();
    for l in 0..=1 {
        let diff: Vec<f64> = e.values[l].iter().zip(&p.values[l]).map(|(a, b)| a - b).collect();
        let rel = grid.trapezoid_abs(&diff) / grid.trapezoid_abs(&e.values[l]);
        assert!(rel < 1e-3, "level {l}: {rel}");
    }
}

#[test]
fn checkpoints_reproduce_a_single_run() {
    let m = presets::smooth_oscillating();
    let grid = UniformGrid::new(-8.0, 8.0, 401).unwrap();
    let f0 = GridDensity::gaussian(&grid, 0.0, 1.0, 2);
    let cfg = stable(&m, 10);
    let states = evolve_checkpoints(&m, &f0, &[0.1, 0.2], &cfg).unwrap();
    assert_eq!(states.len(), 2);
    let direct = evolve(&m, &f0, 0.2, &cfg).unwrap();
    // different step splits; both are stable Euler runs of the same ODE
    let diff: Vec<f64> = states[1].values[0].iter().zip(&direct.values[0]).map(|(a, b)| a - b).collect();
    assert!(grid.trapezoid_abs(&diff) < 1e-4);
    assert!(sobolev_norm(&states[1], 2).unwrap() > 0.0);
    assert!(matches!(sobolev_norm(&states[1], 3), Err(Error::Contract(_))));
}

#[test]
fn unstable_step_is_rejected() {
    let m = presets::smooth_oscillating();
    let grid = UniformGrid::new(-8.0, 8.0, 401).unwrap();
    let f0 = GridDensity::gaussian(&grid, 0.0, 1.0, 0);
    let mut cfg = stable(&m, 10);
    cfg.dt *= 1.5;
    match evolve(&m, &f0, 0.1, &cfg) {
        Err(Error::Config(msg)) => assert!(msg.contains("use dt <="), "{msg}"),
        other => panic!("expected a configuration error, got {other:?}"),
    }
}

#[test]
fn narrow_window_is_rejected() {
    // most preimages y - z of a unit-uniform jump fall left of the window
    let m = presets::uniform_jump();
    let grid = UniformGrid::new(-0.1, 0.1, 101).unwrap();
    let r = AdjointOperator::new(&m, &grid, 0, &stable(&m, 10));
    assert!(matches!(r, Err(Error::WindowTooSmall(_))), "{:?}", r.err());
}

fn shared_operator() -> &'static AdjointOperator {
    static OP: OnceLock<AdjointOperator> = OnceLock::new();
    OP.get_or_init(|| {
        let m = presets::smooth_oscillating();
        let grid = UniformGrid::new(-9.0, 9.0, 721).unwrap();
        AdjointOperator::new(&m, &grid, 1, &stable(&m, 10)).unwrap()
    })
}

#[test]
fn one_shot_adjoint_matches_the_operator() {
    let m = presets::smooth_oscillating();
    let op = shared_operator();
    let f = GridDensity::gaussian(&op.grid, 0.3, 1.0, 1);
    assert_eq!(apply_adjoint(&m, &f, &stable(&m, 10)).unwrap(), op.apply(&f).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn adjoint_is_linear_and_mass_free(m1 in -1.0f64..1.0, s1 in 0.5f64..1.2, m2 in -1.0f64..1.0, a in -2.0f64..2.0) {
        let op = shared_operator();
        let grid = op.grid;
        let f = GridDensity::gaussian(&grid, m1, s1, 1);
        let g = GridDensity::gaussian(&grid, m2, 0.8, 1);
        let mut h = f.clone();
        for (rh, rg) in h.values.iter_mut().zip(&g.values) {
            rh.iter_mut().zip(rg).for_each(|(x, y)| *x += a * y);
        }
        let (lf, lg, lh) = (op.apply(&f).unwrap(), op.apply(&g).unwrap(), op.apply(&h).unwrap());
        for l in 0..=1 {
            for j in 0..grid.points {
                let lin = lf[l][j] + a * lg[l][j];
                prop_assert!((lh[l][j] - lin).abs() <= 1e-10 * (1.0 + lin.abs()));
            }
        }
        prop_assert!(grid.trapezoid(&lf[0]).abs() < 1e-6);
    }
}
