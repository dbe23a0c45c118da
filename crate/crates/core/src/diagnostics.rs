//! Characteristic-function decay analysis and density comparison.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};
use crate::fokker_planck::GridDensity;
use crate::grid::{finite_difference, UniformGrid};
use crate::kernels::KernelDecomposition;
use crate::model::CoefficientSet;
use crate::rng::RngSpec;
use crate::simulator::{InitialLaw, OdeOptions, Simulator};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CFEstimate {
    pub xi: Vec<f64>,
    pub values: Vec<Complex64>,
    pub stderr: Vec<f64>,
    pub samples: usize,
}

impl CFEstimate {
    /// Sample means of `e^{i xi X}`. Negative frequencies are conjugates of
    /// the positive ones, and `xi = 0` is exactly one.
    pub fn from_samples(samples: &[f64], xi_grid: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Contract("characteristic function needs samples".into()));
        }
        if xi_grid.iter().any(|x| !x.is_finite()) {
            return Err(Error::Contract("frequency grid must be finite".into()));
        }
        let n = samples.len() as f64;
        let values: Vec<Complex64> = xi_grid
            .par_iter()
            .map(|&xi| {
                if xi == 0.0 {
                    return Complex64::new(1.0, 0.0);
                }
                let w = xi.abs();
                let (mut re, mut im) = (0.0, 0.0);
                for &x in samples {
                    let (s, c) = (w * x).sin_cos();
                    re += c;
                    im += s;
                }
                let v = Complex64::new(re / n, im / n);
                let v = if v.norm() > 1.0 { v / v.norm() } else { v };
                if xi < 0.0 {
                    v.conj()
                } else {
                    v
                }
            })
            .collect();
        let stderr = values.iter().map(|v| ((1.0 - v.norm_sqr()).max(0.0) / n).sqrt()).collect();
        Ok(CFEstimate { xi: xi_grid.to_vec(), values, stderr, samples: samples.len() })
    }

    pub fn noise_floor(&self) -> f64 {
        1.0 / (self.samples as f64).sqrt()
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }
}

/// `points` frequencies spaced evenly in `log xi` over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..points).map(|j| (a + (b - a) * j as f64 / (points - 1).max(1) as f64).exp()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecayCertificate {
    /// `|p_hat|` stays bounded away from zero: the law is not certified to
    /// have a density.
    NoDecay,
    /// Decay faster than any fitted power before the noise floor; the order
    /// is limited only by the band.
    Saturated { band_limit: f64 },
    /// `n_max` is the largest `n` with slope CI upper bound `< -(n + 1)`;
    /// `None` when even `n = 0` is not certified.
    Decay { n_max: Option<u32> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub band: (f64, f64),
    pub points_used: usize,
    pub slope: f64,
    pub slope_ci: (f64, f64),
    pub intercept: f64,
    pub lower_half_slope: f64,
    pub upper_half_slope: f64,
    pub noise_floor: f64,
    /// `-k t / (theta + t)` when declared.
    pub predicted_exponent: Option<f64>,
    pub certificate: DecayCertificate,
}

impl DecayReport {
    pub fn verdict(&self) -> String {
        match &self.certificate {
            DecayCertificate::NoDecay => "no decay (no density)".into(),
            DecayCertificate::Saturated { band_limit } => {
                format!("super-polynomial decay up to the band limit {band_limit}")
            }
            DecayCertificate::Decay { n_max: Some(n) } => format!("density of class C^{n}"),
            DecayCertificate::Decay { n_max: None } => "decay too slow to certify a bounded density".into(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct LineFit {
    slope: f64,
    intercept: f64,
    slope_se: f64,
    n: usize,
}

fn line_fit(pts: &[(f64, f64)]) -> LineFit {
    let n = pts.len();
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let slope_se = if n > 2 { (rss / (nf - 2.0) / sxx).sqrt() } else { f64::INFINITY };
    LineFit { slope, intercept, slope_se, n }
}

fn t_quantile(df: usize) -> f64 {
    StudentsT::new(0.0, 1.0, df.max(1) as f64).map(|t| t.inverse_cdf(0.975)).unwrap_or(1.96)
}

/// Minimum number of frequencies above the noise floor.
pub const MIN_USABLE: usize = 10;

/// Log-log fit of `|p_hat|` over the band, restricted to points at least
/// three standard errors of a zero CF (`3 / sqrt(N)`) above zero.
pub fn decay_fit(cf: &CFEstimate, band: (f64, f64), declared: Option<(f64, f64, f64)>) -> Result<DecayReport> {
    let floor = cf.noise_floor();
    let moduli = cf.moduli();
    let mut in_band: Vec<(f64, f64)> = cf
        .xi
        .iter()
        .zip(&moduli)
        .filter(|(x, _)| **x > 0.0 && **x >= band.0 && **x <= band.1)
        .map(|(x, m)| (*x, *m))
        .collect();
    in_band.sort_by(|a, b| a.0.total_cmp(&b.0));
    let usable: Vec<(f64, f64)> =
        in_band.iter().filter(|(_, m)| *m >= 3.0 * floor).map(|(x, m)| (x.ln(), m.ln())).collect();
    if usable.len() < MIN_USABLE {
        return Err(Error::InsufficientResolution(format!(
            "{} frequencies in [{}, {}] above the noise floor 3/sqrt(N) = {:.3e}; need {MIN_USABLE}",
            usable.len(),
            band.0,
            band.1,
            3.0 * floor
        )));
    }
    let all = line_fit(&usable);
    let half = usable.len() / 2;
    let lower = line_fit(&usable[..half.max(3)]);
    let upper_pts = &usable[half.min(usable.len() - 3)..];
    let upper = line_fit(upper_pts);
    let tq = t_quantile(all.n - 2);
    let ci = (all.slope - tq * all.slope_se, all.slope + tq * all.slope_se);
    let upper_ci_hi = upper.slope + t_quantile(upper.n - 2) * upper.slope_se;

    let mut upper_mod: Vec<f64> = upper_pts.iter().map(|p| p.1.exp()).collect();
    upper_mod.sort_by(f64::total_cmp);
    let median_upper = upper_mod[upper_mod.len() / 2];
    // the fit ends at the noise floor before the band does
    let last_usable = usable.last().map(|p| p.0.exp()).unwrap_or(band.1);
    let noise_limited = in_band.iter().any(|(x, m)| *x > last_usable && *m < 3.0 * floor);

    let certificate = if upper_ci_hi >= -0.1 && median_upper >= (10.0 * floor).max(0.05) {
        DecayCertificate::NoDecay
    } else if noise_limited && upper.slope - lower.slope < -1.0 {
        DecayCertificate::Saturated { band_limit: last_usable }
    } else {
        let x = -ci.1 - 1.0;
        DecayCertificate::Decay { n_max: if x > 0.0 { Some((x.ceil() - 1.0) as u32) } else { None } }
    };
    Ok(DecayReport {
        band,
        points_used: usable.len(),
        slope: all.slope,
        slope_ci: ci,
        intercept: all.intercept,
        lower_half_slope: lower.slope,
        upper_half_slope: upper.slope,
        noise_floor: floor,
        predicted_exponent: declared.map(|(k, theta, t)| -k * t / (theta + t)),
        certificate,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMetrics {
    pub l1: f64,
    pub sup: f64,
    pub w11: f64,
    pub common_grid: UniformGrid,
}

fn resample(d: &GridDensity, level: usize, nodes: &[f64]) -> Vec<f64> {
    let values =
        if level < d.values.len() { d.values[level].clone() } else { finite_difference(&d.grid, &d.values[0]) };
    nodes.iter().map(|&y| if d.grid.contains(y) { d.grid.stencil(y, 3).apply(&values) } else { 0.0 }).collect()
}

/// `L^1`, sup and `W^{1,1}` distances on the finer of the two spacings over
/// the overlap of the windows.
pub fn compare_densities(a: &GridDensity, b: &GridDensity) -> Result<DensityMetrics> {
    let lo = a.grid.lo.max(b.grid.lo);
    let hi = a.grid.hi.min(b.grid.hi);
    if !(hi > lo) {
        return Err(Error::Contract("density windows do not overlap".into()));
    }
    let h = a.grid.spacing().min(b.grid.spacing());
    let points = ((hi - lo) / h).round() as usize + 1;
    let common = UniformGrid::new(lo, hi, points.max(2))?;
    let nodes = common.nodes();
    let (fa, fb) = (resample(a, 0, &nodes), resample(b, 0, &nodes));
    for (d, f) in [(a, &fa), (b, &fb)] {
        let total = d.grid.trapezoid_abs(&d.values[0]);
        let inside = common.trapezoid_abs(f);
        if inside < 0.99 * total {
            return Err(Error::Contract(format!(
                "only {:.2}% of a density's mass lies in the common window [{lo}, {hi}]",
                100.0 * inside / total
            )));
        }
    }
    let diff: Vec<f64> = fa.iter().zip(&fb).map(|(x, y)| x - y).collect();
    let l1 = common.trapezoid_abs(&diff);
    let sup = diff.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (da, db) = (resample(a, 1, &nodes), resample(b, 1, &nodes));
    let ddiff: Vec<f64> = da.iter().zip(&db).map(|(x, y)| x - y).collect();
    Ok(DensityMetrics { l1, sup, w11: l1 + common.trapezoid_abs(&ddiff), common_grid: common })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub runs: usize,
    pub rng: RngSpec,
    pub trunc_i: usize,
    /// Smoothness order `k` and rate `theta` of the declared kernel bound.
    pub k: usize,
    pub theta: f64,
    /// Default `[1, min(0.1 sqrt(N), 1000)]`.
    #[serde(default)]
    pub band: Option<(f64, f64)>,
    #[serde(default = "default_xi_points")]
    pub xi_points: usize,
    /// Fraction of the band (lowest frequencies) used to fit `A`.
    #[serde(default = "default_calibration")]
    pub calibration_fraction: f64,
    /// Runs used for the stopping-time survival check.
    #[serde(default = "default_survival_runs")]
    pub survival_runs: usize,
}

fn default_xi_points() -> usize {
    200
}
fn default_calibration() -> f64 {
    0.25
}
fn default_survival_runs() -> usize {
    20_000
}

impl PipelineConfig {
    pub fn band_for(&self, samples: usize) -> (f64, f64) {
        self.band.unwrap_or((1.0, (0.1 * (samples as f64).sqrt()).clamp(2.0, 1000.0)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalRow {
    pub n: usize,
    pub t: f64,
    pub empirical: f64,
    pub bound: f64,
    pub sigma: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeRow {
    pub xi: f64,
    pub weighted_modulus: f64,
    pub allowance: f64,
    pub envelope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessCertificate {
    pub pass: bool,
    pub verdict: String,
    pub t: f64,
    pub samples: usize,
    pub decay: DecayReport,
    pub fitted_a: f64,
    pub envelope_pass: bool,
    pub envelope: Vec<EnvelopeRow>,
    pub survival: Vec<SurvivalRow>,
    pub cf: CFEstimate,
}

fn envelope_at(xi: f64, k: f64, t: f64, theta: f64, a: f64, ns: &[usize]) -> f64 {
    ns.iter()
        .map(|&n| (-(n as f64) * t).exp() * xi.powf(k) + a * (theta * n as f64).exp())
        .fold(f64::INFINITY, f64::min)
}

/// Simulates `X_t` from `x0`, estimates its characteristic function, fits
/// the decay and checks `|xi|^k |p_hat(xi)|` against
/// `min_n (e^{-n t} |xi|^k + A e^{theta n})` with `A` fitted on the low end
/// of the band, allowing three standard errors. With kernels, the
/// stopping-time survival `P[tau_n >= t] <= e^{-n t}` is checked as well.
pub fn smoothness_pipeline(
    coeffs: &CoefficientSet,
    kernels: Option<&KernelDecomposition>,
    x0: f64,
    t: f64,
    ns: &[usize],
    cfg: &PipelineConfig,
) -> Result<SmoothnessCertificate> {
    if ns.is_empty() {
        return Err(Error::Precondition("smoothness pipeline needs at least one n".into()));
    }
    let sim = Simulator::new(coeffs, cfg.trunc_i, OdeOptions::default())?;
    let samples = sim.batch(&InitialLaw::Point { x: x0 }, &[t], cfg.runs, &cfg.rng, None)?.remove(0);
    let band = cfg.band_for(samples.len());
    let xi = log_grid(band.0, band.1, cfg.xi_points);
    let cf = CFEstimate::from_samples(&samples, &xi)?;
    let decay = decay_fit(&cf, band, Some((cfg.k as f64, cfg.theta, t)))?;

    let k = cfg.k as f64;
    let moduli = cf.moduli();
    let target: Vec<(f64, f64, f64)> = cf
        .xi
        .iter()
        .zip(&moduli)
        .zip(&cf.stderr)
        .map(|((x, m), s)| (*x, x.powf(k) * m, x.powf(k) * 3.0 * s.max(cf.noise_floor())))
        .collect();
    let calib = ((cf.xi.len() as f64 * cfg.calibration_fraction).ceil() as usize).clamp(1, cf.xi.len());
    let covers = |a: f64, rows: &[(f64, f64, f64)]| {
        rows.iter().all(|(x, wm, allow)| wm - allow <= envelope_at(*x, k, t, cfg.theta, a, ns))
    };
    let fitted_a = if covers(0.0, &target[..calib]) {
        0.0
    } else {
        let mut hi = 1e-12;
        while !covers(hi, &target[..calib]) && hi < 1e300 {
            hi *= 2.0;
        }
        let mut lo = hi / 2.0;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if covers(mid, &target[..calib]) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    let envelope: Vec<EnvelopeRow> = target
        .iter()
        .map(|&(x, wm, allow)| EnvelopeRow {
            xi: x,
            weighted_modulus: wm,
            allowance: allow,
            envelope: envelope_at(x, k, t, cfg.theta, fitted_a, ns),
        })
        .collect();
    let envelope_pass = envelope.iter().all(|r| r.weighted_modulus - r.allowance <= r.envelope);

    let mut survival = Vec::new();
    if let Some(kd) = kernels {
        for &n in ns {
            let recs = sim.batch_tau_n(kd, x0, n, t, cfg.survival_runs, &cfg.rng.for_run(u64::MAX - n as u64))?;
            let m = recs.len() as f64;
            let surv = recs.iter().filter(|r| !r.occurred).count() as f64 / m;
            let bound = (-(n as f64) * t).exp();
            let sigma = (bound * (1.0 - bound) / m).sqrt();
            survival.push(SurvivalRow { n, t, empirical: surv, bound, sigma, pass: surv <= bound + 3.0 * sigma });
        }
    }
    let no_density = decay.certificate == DecayCertificate::NoDecay;
    let pass = !no_density && envelope_pass && survival.iter().all(|r| r.pass);
    Ok(SmoothnessCertificate {
        pass,
        verdict: decay.verdict(),
        t,
        samples: samples.len(),
        decay,
        fitted_a,
        envelope_pass,
        envelope,
        survival,
        cf,
    })
}
