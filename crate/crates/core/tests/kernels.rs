use jumplaw::grid::UniformGrid;
use jumplaw::kernels::{conditional_jump_density, kernel_sobolev_audit, make_cutoff, CutoffMode, KernelDecomposition};
use jumplaw::presets;
use jumplaw::Error;
use proptest::prelude::*;

fn exp_kernels(ns: &[usize]) -> KernelDecomposition {
    KernelDecomposition::build(&presets::exp_jump(100.0), ns, 2).unwrap()
}

#[test]
fn mass_is_n_plus_one_for_every_state() {
    let kd = KernelDecomposition::build(&presets::smooth_lorentzian(), &[1, 2, 5], 2).unwrap();
    for n in [1, 2, 5] {
        for j in 0..=20 {
            let y = -5.0 + 0.5 * j as f64;
            let mass = kd.kernel_mass(y, n).unwrap();
            assert!((mass - (n as f64 + 1.0)).abs() < 1e-9, "y = {y}, n = {n}: {mass}");
        }
    }
}

#[test]
fn exp_jump_density_in_closed_form() {
    // h = e^{-z}: mu_n(u) = phi_n(-ln u) / u on (e^{-n-3}, e^{-1})
    let n = 4;
    let kd = exp_kernels(&[n]);
    let cutoff = make_cutoff(n, 2);
    let us: Vec<f64> = (0..200).map(|j| (-(0.9 + 0.032 * j as f64)).exp()).collect();
    let mu = kd.mu_density(0.7, n, &us).unwrap();
    for (u, m) in us.iter().zip(&mu) {
        let s = -u.ln();
        let expect = cutoff.value(s) / u;
        assert!((m - expect).abs() <= 1e-10 * expect.max(1.0), "u = {u}: {m} vs {expect}");
    }
    let full = kd.mu_full_density(0.7, n, &us).unwrap();
    for ((u, m), f) in us.iter().zip(&mu).zip(&full) {
        assert!(*m <= *f * (1.0 + 1e-12));
        if *f > 0.0 {
            assert!((f - 1.0 / u).abs() < 1e-9 / u);
        }
    }
}

#[test]
fn exp_jump_first_sobolev_term() {
    // in s = -ln u: int |mu'(u)| du = int |phi'(s) + phi(s)| e^s ds
    let n = 3;
    let kd = exp_kernels(&[n]);
    let cutoff = make_cutoff(n, 2);
    let steps = 400_000;
    let (a, b) = (1.0, n as f64 + 3.0);
    let h = (b - a) / steps as f64;
    let f = |s: f64| {
        let d = cutoff.derivatives(s, 1);
        (d[0] + d[1]).abs() * s.exp()
    };
    let oracle: f64 = (0..steps).map(|j| f(a + (j as f64 + 0.5) * h)).sum::<f64>() * h;
    let norms = kd.sobolev_norm(0.0, n, 2, 8).unwrap();
    assert!((norms[0] - 4.0).abs() < 1e-9);
    // Gauss panels straddle the zeros of phi' + phi, where |.| has a kink
    assert!((norms[1] - oracle).abs() / oracle < 1e-4, "{} vs {oracle}", norms[1]);
    let grid = kd.sobolev_norm_on_grid(0.0, n, 200_001).unwrap();
    assert!((grid[1] - oracle).abs() / oracle < 1e-3);
}

#[test]
fn audit_growth_rate_for_exp_jump() {
    let kd = exp_kernels(&[1, 2, 3, 5, 8]);
    let y = UniformGrid::new(-2.0, 2.0, 5).unwrap();
    let report = kernel_sobolev_audit(&kd, &y, &[1, 2, 3, 5, 8], 2, 3.0, 4.0).unwrap();
    assert!(report.pass);
    // e^{2s} from the second derivative, diluted by the mass n + 1
    assert!(report.fitted_theta > 1.6 && report.fitted_theta < 2.0, "{}", report.fitted_theta);
    assert!(report.grid_cross_check < 1e-3);
    let tight = kernel_sobolev_audit(&kd, &y, &[1, 2, 3, 5, 8], 2, 3.0, 1.0).unwrap();
    assert!(!tight.pass);
}

#[test]
fn acceptance_probabilities() {
    let kd = exp_kernels(&[3]);
    assert_eq!(kd.acceptance(0.0, 0.5, 3).unwrap(), 0.0);
    assert_eq!(kd.acceptance(0.0, 3.0, 3).unwrap(), 1.0);
    assert_eq!(kd.acceptance(0.0, 7.0, 3).unwrap(), 0.0);
    assert!((kd.acceptance(0.0, 1.5, 3).unwrap() - 0.5).abs() < 1e-14);
    let unit = kd.clone().with_mode(CutoffMode::Unit);
    assert_eq!(unit.acceptance(0.0, 0.5, 3).unwrap(), 1.0);
    assert!(matches!(kd.acceptance(0.0, 1.5, 4), Err(Error::Contract(_))));
}

#[test]
fn state_dependent_rate_rescales_the_support() {
    let m = presets::smooth_lorentzian();
    let kd = KernelDecomposition::build(&m, &[2], 2).unwrap();
    for y in [-1.0, 0.0, 1.2] {
        let g = m.rate_at(y);
        let (lo, hi) = kd.z_support(y, 2).unwrap();
        assert!((lo - 1.0 / g).abs() < 1e-12 && (hi - 5.0 / g).abs() < 1e-12);
    }
}

#[test]
fn post_jump_density_has_unit_mass_and_mean() {
    let kd = exp_kernels(&[2]);
    let grid = UniformGrid::new(0.0, 1.0, 20_001).unwrap();
    let d = conditional_jump_density(&kd, 0.0, 2, &grid).unwrap();
    assert!((d.mass() - 1.0).abs() < 1e-12);
    let mean: Vec<f64> = grid.nodes().iter().zip(&d.values[0]).map(|(y, v)| y * v).collect();
    let mean = grid.trapezoid(&mean);
    // E e^{-Z} under phi_2 / 3, by the midpoint rule in z
    let cutoff = make_cutoff(2, 2);
    let steps = 200_000;
    let h = 4.0 / steps as f64;
    let oracle: f64 = (0..steps)
        .map(|j| {
            let z = 1.0 + (j as f64 + 0.5) * h;
            cutoff.value(z) * (-z).exp()
        })
        .sum::<f64>()
        * h
        / 3.0;
    assert!((mean - oracle).abs() < 1e-5, "{mean} vs {oracle}");
    assert!((kd.conditional_mean_jump(0.0, 2).unwrap() - oracle).abs() < 1e-10);
}

#[test]
fn collapsing_jump_is_degenerate() {
    let kd = KernelDecomposition::build(&presets::counterexample(100.0), &[2], 2).unwrap();
    // y = 0 makes both jump terms vanish
    assert!(matches!(kd.kernel_mass(0.0, 2), Err(Error::DegenerateKernel(_))));
}

#[test]
fn bounded_measure_cannot_host_kernels() {
    assert!(KernelDecomposition::build(&presets::uniform_jump(), &[1], 2).is_err());
    let mut m = presets::exp_jump(100.0);
    m.rate = jumplaw::functions::ScalarFn::zero();
    assert!(matches!(KernelDecomposition::build(&m, &[1], 2), Err(Error::Precondition(_))));
    assert!(KernelDecomposition::build(&presets::exp_jump(100.0), &[0], 2).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cutoff_derivatives_match_differences(n in 1usize..20, s in 1.0f64..23.0) {
        let c = make_cutoff(n, 3);
        let h = 1e-5;
        let d = c.derivatives(s, 1);
        let fd = (c.value(s + h) - c.value(s - h)) / (2.0 * h);
        prop_assert!((d[1] - fd).abs() < 1e-6);
        prop_assert!((0.0..=1.0).contains(&d[0]));
        prop_assert!(d[1].abs() <= c.bounds[1] + 1e-12);
    }

    #[test]
    fn cutoff_mass_is_n_plus_one(n in 1usize..40) {
        let c = make_cutoff(n, 2);
        let steps = 20_000 * (n + 2);
        let h = (n as f64 + 2.0) / steps as f64;
        let integral: f64 = (0..steps).map(|j| c.value(1.0 + (j as f64 + 0.5) * h)).sum::<f64>() * h;
        prop_assert!((integral - c.mass()).abs() < 1e-8);
    }

    #[test]
    fn kernel_never_exceeds_the_full_image(y in -4.0f64..4.0, u in 0.0f64..0.5) {
        let kd = KernelDecomposition::build(&presets::smooth_lorentzian(), &[3], 2).unwrap();
        let mu = kd.mu_density(y, 3, &[u]).unwrap()[0];
        let full = kd.mu_full_density(y, 3, &[u]).unwrap()[0];
        prop_assert!(mu >= 0.0 && mu <= full * (1.0 + 1e-12));
    }
}
