use jumplaw::diagnostics::{
    compare_densities, decay_fit, log_grid, smoothness_pipeline, CFEstimate, DecayCertificate, PipelineConfig,
};
use jumplaw::fokker_planck::GridDensity;
use jumplaw::grid::UniformGrid;
use jumplaw::presets;
use jumplaw::rng::RngSpec;
use jumplaw::Error;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use statrs::distribution::{ContinuousCDF, Normal};

/// A synthetic estimate with the given moduli and `samples` draws.
fn synthetic(xi: &[f64], modulus: impl Fn(f64) -> f64, samples: usize) -> CFEstimate {
    let values: Vec<Complex64> = xi.iter().map(|x| Complex64::new(modulus(*x), 0.0)).collect();
    let stderr = values.iter().map(|v| ((1.0 - v.norm_sqr()) / samples as f64).sqrt()).collect();
    CFEstimate { xi: xi.to_vec(), values, stderr, samples }
}

#[test]
fn exact_power_law_orders() {
    let xi = log_grid(1.0, 100.0, 60);
    let cases = [(3.5, Some(2)), (3.0, Some(1)), (1.2, Some(0)), (0.8, None)];
    for (a, expect) in cases {
        let cf = synthetic(&xi, |x| 0.9 * x.powf(-a), 1 << 40);
        let r = decay_fit(&cf, (1.0, 100.0), None).unwrap();
        assert!((r.slope + a).abs() < 1e-9);
        assert_eq!(r.certificate, DecayCertificate::Decay { n_max: expect }, "a = {a}");
    }
}

#[test]
fn flat_modulus_is_no_decay() {
    let xi = log_grid(1.0, 50.0, 40);
    let cf = synthetic(&xi, |_| 0.4, 100_000);
    let r = decay_fit(&cf, (1.0, 50.0), Some((2.0, 1.0, 0.5))).unwrap();
    assert_eq!(r.certificate, DecayCertificate::NoDecay);
    assert_eq!(r.verdict(), "no decay (no density)");
    // -k t / (theta + t)
    assert!((r.predicted_exponent.unwrap() + 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn gaussian_samples_saturate() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let xs: Vec<f64> = (0..200_000).map(|_| StandardNormal.sample(&mut rng)).collect();
    let xi = log_grid(0.2, 10.0, 80);
    let cf = CFEstimate::from_samples(&xs, &xi).unwrap();
    let r = decay_fit(&cf, (0.2, 10.0), None).unwrap();
    match r.certificate {
        DecayCertificate::Saturated { band_limit } => {
            // e^{-xi^2 / 2} meets 3 / sqrt(N) near xi = 3.2
            assert!(band_limit > 2.7 && band_limit < 3.3, "{band_limit}");
        }
        other => panic!("expected saturation, got {other:?}"),
    }
}

#[test]
fn laplace_samples_are_continuous_only() {
    // the difference of two unit exponentials has CF 1 / (1 + xi^2) and a kink at 0
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let e = Exp::new(1.0).unwrap();
    let xs: Vec<f64> = (0..1_000_000).map(|_| e.sample(&mut rng) - e.sample(&mut rng)).collect();
    let xi = log_grid(1.0, 100.0, 120);
    let cf = CFEstimate::from_samples(&xs, &xi).unwrap();
    for (x, v, s) in itertools(&cf) {
        assert!((v - 1.0 / (1.0 + x * x)).abs() <= 5.0 * s.max(cf.noise_floor()));
    }
    let r = decay_fit(&cf, (1.0, 100.0), None).unwrap();
    assert_eq!(r.certificate, DecayCertificate::Decay { n_max: Some(0) }, "{r:?}");
    assert_eq!(r.verdict(), "density of class C^0");
}

fn itertools(cf: &CFEstimate) -> Vec<(f64, f64, f64)> {
    cf.xi.iter().zip(cf.moduli()).zip(&cf.stderr).map(|((x, m), s)| (*x, m, *s)).collect()
}

#[test]
fn too_few_usable_frequencies() {
    let xi = log_grid(1.0, 100.0, 30);
    let cf = synthetic(&xi, |x| (-x).exp(), 10_000);
    assert!(matches!(decay_fit(&cf, (1.0, 100.0), None), Err(Error::InsufficientResolution(_))));
    assert!(matches!(CFEstimate::from_samples(&[], &xi), Err(Error::Contract(_))));
}

#[test]
fn shifted_gaussians_distance() {
    let grid = UniformGrid::new(-10.0, 10.0, 4001).unwrap();
    let a = GridDensity::gaussian(&grid, 0.0, 1.0, 1);
    let same = compare_densities(&a, &a).unwrap();
    assert_eq!((same.l1, same.sup, same.w11), (0.0, 0.0, 0.0));
    let delta = 0.3;
    let coarse = UniformGrid::new(-9.0, 11.0, 1001).unwrap();
    let b = GridDensity::gaussian(&coarse, delta, 1.0, 0);
    let m = compare_densities(&a, &b).unwrap();
    // L1 between N(0, 1) and N(delta, 1) is 2 (2 Phi(delta / 2) - 1)
    let phi = Normal::new(0.0, 1.0).unwrap();
    let expect = 2.0 * (2.0 * phi.cdf(delta / 2.0) - 1.0);
    assert!((m.l1 - expect).abs() < 1e-5, "{} vs {expect}", m.l1);
    assert_eq!(m.common_grid.spacing(), grid.spacing());
    assert!(m.w11 > m.l1);
    let far = GridDensity::gaussian(&UniformGrid::new(5.0, 30.0, 501).unwrap(), 15.0, 1.0, 0);
    assert!(matches!(compare_densities(&a, &far), Err(Error::Contract(_))));
}

#[test]
fn collapsing_jump_has_no_density() {
    let cfg = PipelineConfig {
        runs: 20_000,
        rng: RngSpec::new(4),
        trunc_i: 4,
        k: 2,
        theta: 1.0,
        band: None,
        xi_points: 60,
        calibration_fraction: 0.25,
        survival_runs: 1_000,
    };
    let cert = smoothness_pipeline(&presets::counterexample(100.0), None, 1.0, 0.5, &[1, 2], &cfg).unwrap();
    assert!(!cert.pass);
    assert_eq!(cert.verdict, "no decay (no density)");
    assert!(cert.survival.is_empty());
    assert_eq!(cert.decay.band, (1.0, 0.1 * 20_000f64.sqrt()));
    assert_eq!(cert.samples, 20_000);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn power_law_certificate(a in 0.3f64..7.0, scale in 0.05f64..1.0) {
        let xi = log_grid(1.0, 200.0, 50);
        let cf = synthetic(&xi, |x| scale * x.powf(-a), 1 << 50);
        let r = decay_fit(&cf, (1.0, 200.0), None).unwrap();
        let expect = if a > 1.0 + 1e-9 { Some((a - 1.0).ceil() as u32 - 1) } else { None };
        prop_assert_eq!(r.certificate, DecayCertificate::Decay { n_max: expect });
    }

    #[test]
    fn estimate_is_a_valid_cf(seed in 0u64..1000, scale in 0.1f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<f64> = (0..500).map(|_| { let z: f64 = StandardNormal.sample(&mut rng); scale * z }).collect();
        let xi = [-2.0, -0.5, 0.0, 0.5, 2.0];
        let cf = CFEstimate::from_samples(&xs, &xi).unwrap();
        prop_assert_eq!(cf.values[2], Complex64::new(1.0, 0.0));
        prop_assert_eq!(cf.values[0], cf.values[4].conj());
        prop_assert!(cf.moduli().iter().all(|m| *m <= 1.0));
    }
}
