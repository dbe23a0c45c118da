//! Monte Carlo engine: thinning simulation of the jump SDE, the
//! Poissonized-drift process and the first regularizing jump `tau_n`.
//!
//! Candidates come from a Poisson measure with intensity
//! `gamma_bar dt q(dz)` on the truncation `G_i`; a candidate `(u, z)` with
//! `u` uniform on `[0, gamma_bar]` is accepted iff `u <= gamma(X_{t-})`.
//! The truncation is split into shells `G_j \ G_{j-1}`, each fed by its own
//! random lane, so that raising the truncation index only adds candidates.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::CFEstimate;
use crate::error::{Error, Result};
use crate::fokker_planck::GridDensity;
use crate::grid::UniformGrid;
use crate::kernels::KernelDecomposition;
use crate::model::{CoefficientSet, Interval};
use crate::rng::{RngSpec, LANE_AUX, LANE_DRIFT, LANE_INITIAL, LANE_SHELL0};

/// Cap on the number of stored events per trajectory.
pub const MAX_EVENTS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdeOptions {
    /// Largest RK4 step.
    pub max_step: f64,
    /// Smallest number of RK4 steps per inter-event gap.
    pub min_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { max_step: 1e-3, min_steps: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum InitialLaw {
    Point { x: f64 },
    Gaussian { mean: f64, std: f64 },
}

impl InitialLaw {
    pub fn sample(&self, rng: &RngSpec) -> f64 {
        match *self {
            InitialLaw::Point { x } => x,
            InitialLaw::Gaussian { mean, std } => {
                let mut r = rng.lane(LANE_INITIAL);
                Normal::new(mean, std).map(|d| d.sample(&mut r)).unwrap_or(f64::NAN)
            }
        }
    }

    /// Tabulated density with its first `k` derivatives.
    pub fn density(&self, grid: &UniformGrid, k: usize) -> Result<GridDensity> {
        match *self {
            InitialLaw::Point { .. } => Err(Error::Precondition("a point mass has no grid density".into())),
            InitialLaw::Gaussian { mean, std } => Ok(GridDensity::gaussian(grid, mean, std, k)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    DriftPoisson,
    JumpAccepted,
    JumpRejected,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub mark: Option<f64>,
    pub pre: f64,
    pub post: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Recording {
    /// Every event, rejected candidates included (capped at [`MAX_EVENTS`]).
    Full,
    AcceptedOnly,
    #[default]
    CountsOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub x0: f64,
    pub t_end: f64,
    pub events: Vec<Event>,
    pub terminal: f64,
    pub accepted: usize,
    pub rejected: usize,
    pub drift_events: usize,
    /// True when events beyond [`MAX_EVENTS`] were counted but not stored.
    pub truncated_log: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularizingJumpRecord {
    pub n: usize,
    /// `tau_n`, or `t_max` when no regularizing jump occurred.
    pub tau_n: f64,
    pub pre_state: f64,
    pub post_state: f64,
    pub mark: f64,
    pub occurred: bool,
    /// Jumps accepted before `tau_n` that failed the `v`-thinning.
    pub prior_jumps: usize,
}

/// Event counts summed over a batch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub runs: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub drift_events: usize,
}

impl BatchStats {
    /// Fraction of thinning candidates that were accepted.
    pub fn acceptance_rate(&self) -> f64 {
        let total = self.accepted + self.rejected;
        if total == 0 {
            0.0
        } else {
            self.accepted as f64 / total as f64
        }
    }
}

/// Inverse-CDF sampler for `q` restricted to an interval.
#[derive(Debug, Clone)]
enum PieceSampler {
    Uniform,
    /// Cumulative masses at cell edges, with density values for a
    /// piecewise-linear in-cell density.
    Table {
        cdf: Vec<f64>,
        dens: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
struct Piece {
    lo: f64,
    hi: f64,
    mass: f64,
    sampler: PieceSampler,
}

const TABLE_CELLS: usize = 8192;

impl Piece {
    fn new(coeffs: &CoefficientSet, lo: f64, hi: f64) -> Self {
        let measure = &coeffs.measure;
        if measure.density.is_constant() {
            let mass = measure.density.value(0.5 * (lo + hi)) * (hi - lo);
            return Piece { lo, hi, mass, sampler: PieceSampler::Uniform };
        }
        let w = (hi - lo) / TABLE_CELLS as f64;
        let dens: Vec<f64> = (0..=TABLE_CELLS).map(|j| measure.density_at(lo + j as f64 * w).max(0.0)).collect();
        let mut cdf = vec![0.0; TABLE_CELLS + 1];
        for j in 0..TABLE_CELLS {
            cdf[j + 1] = cdf[j] + 0.5 * w * (dens[j] + dens[j + 1]);
        }
        let mass = measure.mass_on(&Interval::new(lo, hi));
        Piece { lo, hi, mass, sampler: PieceSampler::Table { cdf, dens } }
    }

    fn sample(&self, v: f64) -> f64 {
        match &self.sampler {
            PieceSampler::Uniform => self.lo + v * (self.hi - self.lo),
            PieceSampler::Table { cdf, dens } => {
                let target = v * cdf[TABLE_CELLS];
                let j = cdf.partition_point(|&c| c <= target).clamp(1, TABLE_CELLS) - 1;
                let w = (self.hi - self.lo) / TABLE_CELLS as f64;
                let rest = target - cdf[j];
                let (d0, d1) = (dens[j], dens[j + 1]);
                let slope = (d1 - d0) / w;
                // d0 s + slope s^2 / 2 = rest
                let s = if slope.abs() < 1e-14 * (d0 + d1).max(1e-300) {
                    if d0 > 0.0 {
                        rest / d0
                    } else {
                        0.5 * w
                    }
                } else {
                    let disc = (d0 * d0 + 2.0 * slope * rest).max(0.0);
                    2.0 * rest / (d0 + disc.sqrt())
                };
                self.lo + j as f64 * w + s.clamp(0.0, w)
            }
        }
    }
}

/// Candidate stream on one shell `G_j \ G_{j-1}`.
#[derive(Debug, Clone)]
struct Shell {
    rate: f64,
    mass: f64,
    pieces: Vec<Piece>,
}

impl Shell {
    fn sample_mark(&self, rng: &mut ChaCha8Rng) -> f64 {
        let mut v: f64 = rng.random::<f64>() * self.mass;
        let w: f64 = rng.random();
        for p in &self.pieces {
            if v < p.mass {
                return p.sample(w);
            }
            v -= p.mass;
        }
        self.pieces.last().map(|p| p.sample(w)).unwrap_or(f64::NAN)
    }
}

/// Reusable simulation setup for one model and truncation index.
#[derive(Debug, Clone)]
pub struct Simulator {
    pub coeffs: CoefficientSet,
    pub trunc_i: usize,
    pub ode: OdeOptions,
    pub gamma_bar: f64,
    shells: Vec<Shell>,
}

struct Regularizer<'a> {
    kernels: &'a KernelDecomposition,
    n: usize,
}

#[derive(Default)]
struct RunOutcome {
    observed: Vec<f64>,
    events: Vec<Event>,
    accepted: usize,
    rejected: usize,
    drift_events: usize,
    truncated_log: bool,
    regularizing: Option<(f64, f64, f64, f64)>,
}

impl Simulator {
    pub fn new(coeffs: &CoefficientSet, trunc_i: usize, ode: OdeOptions) -> Result<Self> {
        coeffs.validate()?;
        let measure = &coeffs.measure;
        measure.truncation(trunc_i)?;
        let gamma_bar = coeffs.rate_bound();
        let mut shells = Vec::with_capacity(trunc_i);
        let mut prev: Option<Interval> = None;
        for j in 1..=trunc_i {
            let g = measure.truncation(j)?;
            let mut pieces = Vec::new();
            match prev {
                None => pieces.push(Piece::new(coeffs, g.lo, g.hi)),
                Some(p) => {
                    if g.lo < p.lo {
                        pieces.push(Piece::new(coeffs, g.lo, p.lo));
                    }
                    if g.hi > p.hi {
                        pieces.push(Piece::new(coeffs, p.hi, g.hi));
                    }
                }
            }
            let mass: f64 = pieces.iter().map(|p| p.mass).sum();
            shells.push(Shell { rate: gamma_bar * mass, mass, pieces });
            prev = Some(g);
        }
        Ok(Simulator { coeffs: coeffs.clone(), trunc_i, ode, gamma_bar, shells })
    }

    /// `q(G_i)`.
    pub fn truncation_mass(&self) -> f64 {
        self.shells.iter().map(|s| s.mass).sum()
    }

    fn rk4(&self, x: f64, dt: f64) -> f64 {
        let b = |y: f64| self.coeffs.drift.value(y);
        let k1 = b(x);
        let k2 = b(x + 0.5 * dt * k1);
        let k3 = b(x + 0.5 * dt * k2);
        let k4 = b(x + dt * k3);
        x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    }

    fn flow(&self, x: f64, gap: f64) -> f64 {
        if gap <= 0.0 || self.coeffs.drift.is_zero() {
            return x;
        }
        let steps = ((gap / self.ode.max_step).ceil() as usize).max(self.ode.min_steps);
        let dt = gap / steps as f64;
        (0..steps).fold(x, |y, _| self.rk4(y, dt))
    }

    fn run(
        &self,
        x0: f64,
        times: &[f64],
        rng: &RngSpec,
        poisson_i: Option<f64>,
        regularizer: Option<Regularizer<'_>>,
        recording: Recording,
    ) -> Result<RunOutcome> {
        rng.validate()?;
        if !x0.is_finite() {
            return Err(Error::Precondition(format!("initial state {x0} is not finite")));
        }
        if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::Precondition("observation times must be sorted and nonnegative".into()));
        }
        let t_end = times.last().copied().unwrap_or(0.0);
        let mut out = RunOutcome { observed: Vec::with_capacity(times.len()), ..Default::default() };

        // sources: 0..shells are jump shells, the last (optional) is the drift clock
        let mut lanes: Vec<ChaCha8Rng> = (0..self.shells.len()).map(|j| rng.lane(LANE_SHELL0 + j as u64)).collect();
        let mut rates: Vec<f64> = self.shells.iter().map(|s| s.rate).collect();
        if let Some(i) = poisson_i {
            lanes.push(rng.lane(LANE_DRIFT));
            rates.push(i);
        }
        let mut aux = rng.lane(LANE_AUX);
        let mut next: Vec<f64> = lanes.iter_mut().zip(&rates).map(|(r, &rate)| draw_gap(r, rate)).collect();

        let mut t = 0.0;
        let mut x = x0;
        let mut obs = 0;
        let store = |out: &mut RunOutcome, e: Event| {
            if out.events.len() < MAX_EVENTS {
                out.events.push(e);
            } else {
                out.truncated_log = true;
            }
        };

        loop {
            let (src, tc) =
                next.iter()
                    .enumerate()
                    .fold((usize::MAX, f64::INFINITY), |acc, (j, &tj)| if tj < acc.1 { (j, tj) } else { acc });
            // observations before the next event
            while obs < times.len() && times[obs] <= tc.min(t_end) {
                let flowed = if poisson_i.is_some() { x } else { self.flow(x, times[obs] - t) };
                if poisson_i.is_none() {
                    x = flowed;
                    t = times[obs];
                }
                out.observed.push(flowed);
                obs += 1;
            }
            if tc > t_end || src == usize::MAX {
                break;
            }
            if poisson_i.is_none() {
                x = self.flow(x, tc - t);
            }
            t = tc;

            if poisson_i.is_some() && src == self.shells.len() {
                let i = rates[src];
                let pre = x;
                x += self.coeffs.drift.value(x) / i;
                out.drift_events += 1;
                if recording == Recording::Full {
                    store(&mut out, Event { time: t, kind: EventKind::DriftPoisson, mark: None, pre, post: x });
                }
            } else {
                let lane = &mut lanes[src];
                let u: f64 = lane.random::<f64>() * self.gamma_bar;
                let z = self.shells[src].sample_mark(lane);
                let g = self.coeffs.rate_at(x);
                if g > self.gamma_bar || !(g >= 0.0) {
                    return Err(Error::Precondition(format!(
                        "gamma({x}) = {g} leaves [0, {}]; widen the audit window",
                        self.gamma_bar
                    )));
                }
                let pre = x;
                if u <= g {
                    x = pre + self.coeffs.jump.value(pre, z);
                    out.accepted += 1;
                    if recording != Recording::CountsOnly {
                        store(&mut out, Event { time: t, kind: EventKind::JumpAccepted, mark: Some(z), pre, post: x });
                    }
                    if let Some(reg) = &regularizer {
                        let v: f64 = aux.random();
                        let (_, zhi) = reg.kernels.z_support(pre, reg.n)?;
                        let cover = self.coeffs.measure.truncation(self.trunc_i)?;
                        if zhi > cover.hi + 1e-12 && reg.kernels.mode == crate::kernels::CutoffMode::Smooth {
                            return Err(Error::Precondition(format!(
                                "truncation G_{} ends at {} but the kernel n = {} reaches {zhi}",
                                self.trunc_i, cover.hi, reg.n
                            )));
                        }
                        if v <= reg.kernels.acceptance(pre, z, reg.n)? {
                            out.regularizing = Some((t, pre, x, z));
                            return Ok(out);
                        }
                    }
                } else {
                    out.rejected += 1;
                    if recording == Recording::Full {
                        store(
                            &mut out,
                            Event { time: t, kind: EventKind::JumpRejected, mark: Some(z), pre, post: pre },
                        );
                    }
                }
            }
            if !x.is_finite() {
                return Err(Error::BlowUp { time: t, state: x, events: out.events.len() });
            }
            next[src] = t + draw_gap(&mut lanes[src], rates[src]);
        }
        while out.observed.len() < times.len() {
            out.observed.push(x);
        }
        if !x.is_finite() {
            return Err(Error::BlowUp { time: t, state: x, events: out.events.len() });
        }
        Ok(out)
    }

    fn trajectory(&self, x0: f64, t_end: f64, out: RunOutcome) -> Trajectory {
        Trajectory {
            x0,
            t_end,
            terminal: out.observed.last().copied().unwrap_or(x0),
            events: out.events,
            accepted: out.accepted,
            rejected: out.rejected,
            drift_events: out.drift_events,
            truncated_log: out.truncated_log,
        }
    }

    pub fn exact(&self, x0: f64, t_end: f64, rng: &RngSpec, recording: Recording) -> Result<Trajectory> {
        let out = self.run(x0, &[t_end], rng, None, None, recording)?;
        Ok(self.trajectory(x0, t_end, out))
    }

    pub fn poissonized(
        &self,
        x0: f64,
        t_end: f64,
        i: usize,
        rng: &RngSpec,
        recording: Recording,
    ) -> Result<Trajectory> {
        if i == 0 {
            return Err(Error::Precondition("Poissonization index must be >= 1".into()));
        }
        let out = self.run(x0, &[t_end], rng, Some(i as f64), None, recording)?;
        Ok(self.trajectory(x0, t_end, out))
    }

    /// States at each of the sorted `times` along one path.
    pub fn observe(&self, x0: f64, times: &[f64], rng: &RngSpec, poisson_i: Option<usize>) -> Result<Vec<f64>> {
        Ok(self.run(x0, times, rng, poisson_i.map(|i| i as f64), None, Recording::CountsOnly)?.observed)
    }

    pub fn tau_n(
        &self,
        kernels: &KernelDecomposition,
        x0: f64,
        n: usize,
        t_max: f64,
        rng: &RngSpec,
    ) -> Result<RegularizingJumpRecord> {
        if kernels.coeffs != self.coeffs {
            return Err(Error::Contract("kernels were built for a different model".into()));
        }
        kernels.cutoff(n)?;
        let out = self.run(x0, &[t_max], rng, None, Some(Regularizer { kernels, n }), Recording::CountsOnly)?;
        Ok(match out.regularizing {
            Some((tau, pre, post, z)) => RegularizingJumpRecord {
                n,
                tau_n: tau,
                pre_state: pre,
                post_state: post,
                mark: z,
                occurred: true,
                prior_jumps: out.accepted - 1,
            },
            None => {
                let x = out.observed.last().copied().unwrap_or(x0);
                RegularizingJumpRecord {
                    n,
                    tau_n: t_max,
                    pre_state: x,
                    post_state: x,
                    mark: f64::NAN,
                    occurred: false,
                    prior_jumps: out.accepted,
                }
            }
        })
    }

    /// Independent terminal states at each of `times` for `runs` paths.
    pub fn batch(
        &self,
        law: &InitialLaw,
        times: &[f64],
        runs: usize,
        rng: &RngSpec,
        poisson_i: Option<usize>,
    ) -> Result<Vec<Vec<f64>>> {
        Ok(self.batch_with_stats(law, times, runs, rng, poisson_i)?.0)
    }

    /// [`Simulator::batch`] together with the summed event counts.
    pub fn batch_with_stats(
        &self,
        law: &InitialLaw,
        times: &[f64],
        runs: usize,
        rng: &RngSpec,
        poisson_i: Option<usize>,
    ) -> Result<(Vec<Vec<f64>>, BatchStats)> {
        let paths: Vec<(Vec<f64>, usize, usize, usize)> = (0..runs as u64)
            .into_par_iter()
            .map(|r| {
                let spec = rng.for_run(r);
                let x0 = law.sample(&spec);
                self.run(x0, times, &spec, poisson_i.map(|i| i as f64), None, Recording::CountsOnly)
                    .map(|o| (o.observed, o.accepted, o.rejected, o.drift_events))
                    .map_err(|e| Error::InRun { run: r, source: Box::new(e) })
            })
            .collect::<Result<_>>()?;
        let mut stats = BatchStats { runs, ..BatchStats::default() };
        for p in &paths {
            stats.accepted += p.1;
            stats.rejected += p.2;
            stats.drift_events += p.3;
        }
        let states = (0..times.len()).map(|j| paths.iter().map(|p| p.0[j]).collect()).collect();
        Ok((states, stats))
    }

    pub fn batch_tau_n(
        &self,
        kernels: &KernelDecomposition,
        x0: f64,
        n: usize,
        t_max: f64,
        runs: usize,
        rng: &RngSpec,
    ) -> Result<Vec<RegularizingJumpRecord>> {
        (0..runs as u64).into_par_iter().map(|r| self.tau_n(kernels, x0, n, t_max, &rng.for_run(r))).collect()
    }
}

fn draw_gap(rng: &mut ChaCha8Rng, rate: f64) -> f64 {
    if rate > 0.0 {
        Exp::new(rate).map(|d| d.sample(rng)).unwrap_or(f64::INFINITY)
    } else {
        f64::INFINITY
    }
}

/// Path of the truncated SDE with RK4 drift between candidate epochs.
pub fn simulate_exact(
    coeffs: &CoefficientSet,
    x0: f64,
    t_end: f64,
    trunc_i: usize,
    rng: &RngSpec,
    ode: OdeOptions,
) -> Result<Trajectory> {
    Simulator::new(coeffs, trunc_i, ode)?.exact(x0, t_end, rng, Recording::Full)
}

/// Path with the drift replaced by jumps `b(X) / i` at rate `i`; jumps over
/// the truncation `G_{trunc_i}`.
pub fn simulate_poissonized(
    coeffs: &CoefficientSet,
    x0: f64,
    t_end: f64,
    i: usize,
    trunc_i: usize,
    rng: &RngSpec,
) -> Result<Trajectory> {
    Simulator::new(coeffs, trunc_i, OdeOptions::default())?.poissonized(x0, t_end, i, rng, Recording::Full)
}

/// First jump that also passes the `v`-thinning against `d_n`.
pub fn sample_tau_n(
    coeffs: &CoefficientSet,
    kernels: &KernelDecomposition,
    x0: f64,
    n: usize,
    t_max: f64,
    trunc_i: usize,
    rng: &RngSpec,
) -> Result<RegularizingJumpRecord> {
    Simulator::new(coeffs, trunc_i, OdeOptions::default())?.tau_n(kernels, x0, n, t_max, rng)
}

/// Gaussian kernel density estimate with analytic derivatives to order
/// `order.min(2)`, normalized to unit trapezoidal mass on the grid.
#[allow(clippy::needless_range_loop)]
pub fn estimate_density(samples: &[f64], grid: &UniformGrid, bandwidth: f64, order: usize) -> Result<GridDensity> {
    if samples.is_empty() {
        return Err(Error::Contract("density estimate needs a nonempty sample".into()));
    }
    if !(bandwidth > 0.0) {
        return Err(Error::Precondition(format!("bandwidth {bandwidth} must be positive")));
    }
    let order = order.min(2);
    let m = grid.points;
    let h = grid.spacing();
    let reach = 8.0 * bandwidth;
    let norm = 1.0 / (samples.len() as f64 * bandwidth * (2.0 * std::f64::consts::PI).sqrt());
    let chunk = samples.len().div_ceil(rayon::current_num_threads().max(1)).max(1024);
    let acc = samples
        .par_chunks(chunk)
        .map(|part| {
            let mut v = vec![vec![0.0; m]; order + 1];
            for &s in part {
                let j0 = (((s - reach - grid.lo) / h).ceil().max(0.0)) as usize;
                let j1f = ((s + reach - grid.lo) / h).floor();
                if j1f < 0.0 {
                    continue;
                }
                let j1 = (j1f as usize).min(m - 1);
                for j in j0..=j1 {
                    let r = (grid.node(j) - s) / bandwidth;
                    let e = (-0.5 * r * r).exp();
                    v[0][j] += e;
                    if order >= 1 {
                        v[1][j] -= r * e / bandwidth;
                    }
                    if order >= 2 {
                        v[2][j] += (r * r - 1.0) * e / (bandwidth * bandwidth);
                    }
                }
            }
            v
        })
        .reduce(
            || vec![vec![0.0; m]; order + 1],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    x.iter_mut().zip(y).for_each(|(p, q)| *p += q);
                }
                a
            },
        );
    let mut values: Vec<Vec<f64>> = acc.into_iter().map(|row| row.into_iter().map(|v| v * norm).collect()).collect();
    let mass = grid.trapezoid(&values[0]);
    if !(mass > 0.0) {
        return Err(Error::Contract("no sample falls inside the grid window".into()));
    }
    values.iter_mut().for_each(|row| row.iter_mut().for_each(|v| *v /= mass));
    Ok(GridDensity { grid: *grid, values, time: 0.0 })
}

/// Silverman's rule of thumb `0.9 min(sd, IQR / 1.34) N^{-1/5}`.
pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let sd = (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |p: f64| sorted[((p * (n - 1.0)).round() as usize).min(sorted.len() - 1)];
    let iqr = q(0.75) - q(0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * n.powf(-0.2)
}

/// Empirical characteristic function on `xi_grid`.
pub fn empirical_cf(samples: &[f64], xi_grid: &[f64]) -> Result<CFEstimate> {
    CFEstimate::from_samples(samples, xi_grid)
}
