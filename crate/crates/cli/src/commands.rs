//! Subcommand drivers.

use anyhow::{bail, Context};
use jumplaw::calculus::transfer_table;
use jumplaw::diagnostics::{
    compare_densities, smoothness_pipeline, DecayCertificate, PipelineConfig, SmoothnessCertificate,
};
use jumplaw::fokker_planck::{evolve_checkpoints, norm_growth_audit, GridDensity};
use jumplaw::kernels::{kernel_sobolev_audit, KernelDecomposition};
use jumplaw::model::{check_a, check_b, check_s, Assumption, AssumptionReport, CoefficientSet, Interval};
use jumplaw::quadrature::QuadratureSpec;
use jumplaw::rng::RngSpec;
use jumplaw::simulator::{estimate_density, silverman_bandwidth, OdeOptions, Simulator};
use jumplaw::Error;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::config::{CertificateKind, ExperimentConfig};
use crate::output::OutputDir;

/// Outcome of a command that ran to completion.
pub struct Outcome {
    pub pass: bool,
    pub seed: Option<u64>,
    pub manifest: Map<String, Value>,
}

pub struct RunContext<'a> {
    pub cfg: &'a ExperimentConfig,
    pub model: CoefficientSet,
    pub seed_override: Option<u64>,
}

impl RunContext<'_> {
    fn seed(&self) -> anyhow::Result<u64> {
        self.seed_override
            .or_else(|| self.cfg.simulation.as_ref().and_then(|s| s.seed))
            .context("a seed is required: set simulation.seed or pass --seed")
    }

    fn default_trunc(&self) -> usize {
        self.model.measure.truncations.len()
    }
}

#[derive(Serialize)]
struct CheckSummary {
    pass: bool,
    results: Vec<CheckResult>,
}

#[derive(Serialize)]
struct CheckResult {
    assumption: Assumption,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

pub fn check(ctx: &RunContext, out: &mut OutputDir) -> anyhow::Result<Outcome> {
    let stanza = ctx.cfg.check.clone().unwrap_or_default();
    let grids = &ctx.cfg.grids;
    let quad = QuadratureSpec::default();
    let mut results = Vec::new();
    for &a in &stanza.assumptions {
        let report: jumplaw::Result<AssumptionReport> = match a {
            Assumption::A => check_a(&ctx.model, &grids.y, &grids.z, &quad),
            Assumption::S => check_s(&ctx.model, &grids.y, &grids.z, stanza.s_tolerance),
            Assumption::B => check_b(&ctx.model, ctx.model.k, ctx.model.p, stanza.theta, stanza.n_max, &grids.y, &quad),
        };
        let name = format!("assumption_{a:?}.json");
        match report {
            Ok(r) => {
                out.json(&name, &r)?;
                results.push(CheckResult { assumption: a, pass: r.pass, error: None });
            }
            // a degenerate kernel is the assumption failing, not the run
            Err(e @ Error::DegenerateKernel(_)) => {
                out.json(&name, &json!({ "assumption": a, "pass": false, "error": e.to_string() }))?;
                results.push(CheckResult { assumption: a, pass: false, error: Some(e.to_string()) });
            }
            Err(e) => return Err(e.into()),
        }
    }
    let pass = results.iter().all(|r| r.pass);
    out.json("check.json", &CheckSummary { pass, results })?;
    Ok(Outcome { pass, seed: None, manifest: Map::new() })
}

/// `q(G \ G_i)` and `int_{G \ G_i} eta dq`; infinite when the quadrature
/// does not settle.
fn discarded(model: &CoefficientSet, trunc_i: usize) -> anyhow::Result<(f64, f64)> {
    let g = model.measure.support;
    let gi = model.measure.truncation(trunc_i)?;
    let pieces = [Interval::new(g.lo, gi.lo), Interval::new(gi.hi, g.hi)];
    let coarse = QuadratureSpec::default();
    let fine = QuadratureSpec { panels: 2 * coarse.panels, nodes_per_panel: coarse.nodes_per_panel };
    let integral = |f: &dyn Fn(f64) -> f64| {
        let mut total = 0.0;
        for p in pieces.iter().filter(|p| p.hi > p.lo) {
            let a = coarse.integrate(p.lo, p.hi, &f);
            let b = fine.integrate(p.lo, p.hi, &f);
            if !(b.is_finite() && (a - b).abs() <= 1e-6 * b.abs().max(1e-12)) {
                return f64::INFINITY;
            }
            total += b;
        }
        total
    };
    let mass = integral(&|z| model.measure.density_at(z));
    let eta = integral(&|z| model.eta.value(z).abs() * model.measure.density_at(z));
    Ok((mass, eta))
}

pub fn simulate(ctx: &RunContext, out: &mut OutputDir) -> anyhow::Result<Outcome> {
    let stanza = ExperimentConfig::stanza(&ctx.cfg.simulation, "simulation")?;
    stanza.validate()?;
    let seed = ctx.seed()?;
    let law = stanza.initial_law()?;
    let trunc_i = stanza.trunc_i.unwrap_or(ctx.default_trunc());
    let sim = Simulator::new(&ctx.model, trunc_i, stanza.ode.unwrap_or_default())?;
    let rng = RngSpec::new(seed);
    let (states, stats) = sim.batch_with_stats(&law, &stanza.times, stanza.runs, &rng, stanza.poisson_i)?;
    let mut files = Vec::new();
    for (t, xs) in stanza.times.iter().zip(&states) {
        let name = format!("samples_t{t}.tsv");
        out.columns(&name, &["x"], &[xs])?;
        files.push(json!({ "t": t, "file": name }));
    }
    let (q_out, eta_out) = discarded(&ctx.model, trunc_i)?;
    let t_max = stanza.times.last().copied().unwrap_or(0.0);
    let mut m = Map::new();
    m.insert("runs".into(), stanza.runs.into());
    m.insert("trunc_i".into(), trunc_i.into());
    m.insert("poisson_i".into(), stanza.poisson_i.map_or(Value::Null, Value::from));
    m.insert("samples".into(), files.into());
    m.insert(
        "events".into(),
        json!({
            "accepted": stats.accepted,
            "rejected": stats.rejected,
            "drift": stats.drift_events,
            "acceptance_rate": stats.acceptance_rate(),
        }),
    );
    m.insert(
        "truncation".into(),
        json!({
            "q_G_i": sim.truncation_mass(),
            "gamma_bar": sim.gamma_bar,
            "q_discarded": q_out,
            "expected_discarded_jumps_per_run_bound": sim.gamma_bar * t_max * q_out,
            "eta_tail": eta_out,
        }),
    );
    Ok(Outcome { pass: true, seed: Some(seed), manifest: m })
}

fn density_columns(out: &mut OutputDir, name: &str, f: &GridDensity) -> anyhow::Result<()> {
    let (names, cols) = f.columns();
    let header: Vec<&str> = names.iter().map(String::as_str).collect();
    let refs: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
    out.columns(name, &header, &refs)
}

/// Largest tolerated drift of the total mass.
const MASS_TOLERANCE: f64 = 1e-4;
/// Largest tolerated `L^1` gap between the engines.
const CROSS_ENGINE_TOLERANCE: f64 = 0.05;

pub fn evolve(ctx: &RunContext, out: &mut OutputDir) -> anyhow::Result<Outcome> {
    let stanza = ExperimentConfig::stanza(&ctx.cfg.evolution, "evolution")?;
    let grid = stanza.grid(&ctx.model)?;
    let cfg = stanza.solver_config(&ctx.model)?;
    let f0 = stanza.initial.density(&grid, stanza.k)?;
    let times: Vec<f64> =
        (1..=stanza.checkpoints.max(1)).map(|c| stanza.t_end * c as f64 / stanza.checkpoints.max(1) as f64).collect();
    let states = evolve_checkpoints(&ctx.model, &f0, &times, &cfg)?;
    density_columns(out, "density_t0.tsv", &f0)?;
    let mut mass_drift = 0.0f64;
    for f in &states {
        density_columns(out, &format!("density_t{}.tsv", f.time), f)?;
        mass_drift = mass_drift.max((f.mass() - f0.mass()).abs());
    }
    let mass_conserved = mass_drift <= MASS_TOLERANCE;
    let mut pass = mass_conserved;
    let mut report = Map::new();
    report.insert("i".into(), cfg.i.into());
    report.insert("dt".into(), cfg.dt.into());
    report.insert("window".into(), json!([grid.lo, grid.hi]));
    report.insert("points".into(), grid.points.into());
    report.insert("max_mass_drift".into(), mass_drift.into());
    report.insert("mass_conserved".into(), mass_conserved.into());

    if stanza.growth_audit {
        let growth = norm_growth_audit(&ctx.model, &f0, stanza.t_end, &cfg, stanza.checkpoints.max(4))?;
        pass &= growth.pass;
        report.insert("growth_pass".into(), growth.pass.into());
        out.json("growth.json", &growth)?;
    }
    let mut seed = None;
    if let Some(runs) = stanza.compare_runs {
        let s = ctx.seed()?;
        seed = Some(s);
        let trunc_i = cfg.trunc.unwrap_or(ctx.default_trunc());
        let sim = Simulator::new(&ctx.model, trunc_i, OdeOptions::default())?;
        let xs = sim.batch(&stanza.initial, &[stanza.t_end], runs, &RngSpec::new(s), Some(cfg.i))?.remove(0);
        let kde = estimate_density(&xs, &grid, silverman_bandwidth(&xs), 0)?;
        let last = states.last().context("no evolved state")?;
        let d = compare_densities(last, &kde)?;
        pass &= d.l1 <= CROSS_ENGINE_TOLERANCE;
        density_columns(out, "simulated_density.tsv", &kde)?;
        report.insert(
            "cross_engine".into(),
            json!({ "runs": runs, "l1": d.l1, "sup": d.sup, "w11": d.w11, "tolerance": CROSS_ENGINE_TOLERANCE }),
        );
    }
    report.insert("pass".into(), pass.into());
    out.json("evolve.json", &Value::Object(report))?;
    let mut m = Map::new();
    m.insert("checkpoints".into(), times.into());
    Ok(Outcome { pass, seed, manifest: m })
}

pub fn kernels(ctx: &RunContext, out: &mut OutputDir) -> anyhow::Result<Outcome> {
    let stanza = ExperimentConfig::stanza(&ctx.cfg.kernels, "kernels")?;
    let k = stanza.k.unwrap_or(ctx.model.k);
    let p = stanza.p.unwrap_or(ctx.model.p);
    let y_grid = stanza.y.unwrap_or(ctx.cfg.grids.y);
    let kd = KernelDecomposition::build(&ctx.model, &stanza.n, k)?;
    let audit = kernel_sobolev_audit(&kd, &y_grid, &kd.ns, k, p, stanza.theta)?;
    out.json("kernel_audit.json", &audit)?;
    let (ns, ys, masses): (Vec<f64>, Vec<f64>, Vec<f64>) =
        audit.rows.iter().fold((Vec::new(), Vec::new(), Vec::new()), |(mut a, mut b, mut c), r| {
            a.push(r.n as f64);
            b.push(r.y);
            c.push(r.mass);
            (a, b, c)
        });
    let norms: Vec<f64> = audit.rows.iter().map(|r| r.normalized_norm).collect();
    out.columns("kernel_mass.tsv", &["n", "y", "mass", "normalized_norm"], &[&ns, &ys, &masses, &norms])?;

    let y = stanza.profile_y;
    for &n in &kd.ns {
        let (za, zb) = kd.z_support(y, n)?;
        let (ua, ub) = (ctx.model.jump.value(y, za), ctx.model.jump.value(y, zb));
        let (lo, hi) = (ua.min(ub), ua.max(ub));
        let pts = stanza.profile_points.max(2);
        let us: Vec<f64> = (0..pts).map(|j| lo + (hi - lo) * j as f64 / (pts - 1) as f64).collect();
        let mu = kd.mu_density(y, n, &us)?;
        out.columns(&format!("kernel_profile_n{n}.tsv"), &["u", "mu"], &[&us, &mu])?;
    }
    if stanza.transfer {
        let ys: Vec<f64> = y_grid.nodes().into_iter().step_by((y_grid.points / 11).max(1)).collect();
        let zs: Vec<f64> = ctx.cfg.grids.z.nodes().into_iter().step_by((ctx.cfg.grids.z.points / 11).max(1)).collect();
        let zs: Vec<f64> = zs.into_iter().filter(|z| ctx.model.measure.support.contains(*z)).collect();
        let rows = transfer_table(&ctx.model, &ys, &zs, stanza.transfer_i, 1e-13)?;
        out.json("transfer.json", &rows)?;
    }
    Ok(Outcome { pass: audit.pass, seed: None, manifest: Map::new() })
}

#[derive(Serialize)]
struct CertifyReport<'a> {
    pass: bool,
    requested: &'a [CertificateKind],
    verdict: &'a str,
    certificate: &'a SmoothnessCertificate,
}

pub fn certify(ctx: &RunContext, out: &mut OutputDir) -> anyhow::Result<Outcome> {
    let stanza = ExperimentConfig::stanza(&ctx.cfg.diagnostics, "diagnostics")?;
    if stanza.certificates.is_empty() {
        bail!("diagnostics.certificates must name at least one of decay, envelope, survival");
    }
    let seed = ctx.seed()?;
    let ns = stanza
        .n
        .clone()
        .or_else(|| ctx.cfg.kernels.as_ref().map(|k| k.n.clone()))
        .unwrap_or_else(|| vec![1, 2, 3, 5, 8]);
    let (k, theta) = match &ctx.cfg.kernels {
        Some(ks) => (ks.k.unwrap_or(ctx.model.k), ks.theta),
        None => (ctx.model.k, 1.0),
    };
    let wants = |c: CertificateKind| stanza.certificates.contains(&c);
    let kd =
        if wants(CertificateKind::Survival) { Some(KernelDecomposition::build(&ctx.model, &ns, k)?) } else { None };
    let pcfg = PipelineConfig {
        runs: stanza.runs,
        rng: RngSpec::new(seed),
        trunc_i: stanza.trunc_i.unwrap_or(ctx.default_trunc()),
        k,
        theta,
        band: stanza.band.map(|[a, b]| (a, b)),
        xi_points: stanza.xi_points,
        calibration_fraction: stanza.calibration_fraction,
        survival_runs: stanza.survival_runs,
    };
    let cert = smoothness_pipeline(&ctx.model, kd.as_ref(), stanza.x0, stanza.t, &ns, &pcfg)?;
    let mut pass = true;
    if wants(CertificateKind::Decay) {
        pass &= cert.decay.certificate != DecayCertificate::NoDecay;
    }
    if wants(CertificateKind::Envelope) {
        pass &= cert.envelope_pass;
    }
    if wants(CertificateKind::Survival) {
        pass &= cert.survival.iter().all(|r| r.pass);
    }
    out.json(
        "certificate.json",
        &CertifyReport { pass, requested: &stanza.certificates, verdict: &cert.verdict, certificate: &cert },
    )?;
    let re: Vec<f64> = cert.cf.values.iter().map(|v| v.re).collect();
    let im: Vec<f64> = cert.cf.values.iter().map(|v| v.im).collect();
    out.columns("cf.tsv", &["xi", "re", "im", "stderr"], &[&cert.cf.xi, &re, &im, &cert.cf.stderr])?;
    let col = |f: fn(&jumplaw::diagnostics::EnvelopeRow) -> f64| cert.envelope.iter().map(f).collect::<Vec<f64>>();
    out.columns(
        "envelope.tsv",
        &["xi", "weighted_modulus", "allowance", "envelope"],
        &[&col(|r| r.xi), &col(|r| r.weighted_modulus), &col(|r| r.allowance), &col(|r| r.envelope)],
    )?;
    let mut m = Map::new();
    m.insert("samples".into(), cert.samples.into());
    m.insert("verdict".into(), cert.verdict.clone().into());
    Ok(Outcome { pass, seed: Some(seed), manifest: m })
}
