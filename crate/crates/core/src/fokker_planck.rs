//! Forward evolution of a density and its derivative stack under the
//! adjoint of the Poissonized generator
//!
//! ```text
//! L^{i*} g(y) = i [g(tau_i(y)) tau_i'(y) - g(y)]
//!             + int_{G} [gamma(tau) g(tau) tau'(y, z) - gamma(y) g(y)] q(dz)
//! ```
//!
//! The `l`-th derivative obeys the same equation with the brackets expanded
//! by the transfer coefficients, so every level of the stack is advanced
//! with exact coefficients and only off-grid reads are interpolated.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{binomial, chain_coefficients, solve_tau, tau_i_stack_unchecked, DerivativeStack, NEAR_SINGULAR};
use crate::error::{Error, Result};
use crate::grid::{finite_difference, UniformGrid, MAX_STENCIL};
use crate::model::{CoefficientSet, Interval};
use crate::quadrature::GaussLegendre;

/// Density and derivatives `values[l][j] = f^{(l)}(y_j)` on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDensity {
    pub grid: UniformGrid,
    pub values: Vec<Vec<f64>>,
    pub time: f64,
}

impl GridDensity {
    pub fn order(&self) -> usize {
        self.values.len() - 1
    }

    /// Normal density with its first `k` derivatives.
    pub fn gaussian(grid: &UniformGrid, mean: f64, std: f64, k: usize) -> Self {
        let nodes = grid.nodes();
        let mut values = vec![vec![0.0; nodes.len()]; k + 1];
        for (j, y) in nodes.iter().enumerate() {
            let r = (y - mean) / std;
            let base = (-0.5 * r * r).exp() / (std * (2.0 * std::f64::consts::PI).sqrt());
            // probabilists' Hermite: He_{l+1} = r He_l - l He_{l-1}
            let (mut h0, mut h1) = (1.0, r);
            for (l, row) in values.iter_mut().enumerate() {
                let he = if l == 0 { h0 } else { h1 };
                let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
                row[j] = sign * he * base / std.powi(l as i32);
                if l >= 1 {
                    let h2 = r * h1 - l as f64 * h0;
                    h0 = h1;
                    h1 = h2;
                }
            }
        }
        GridDensity { grid: *grid, values, time: 0.0 }
    }

    pub fn mass(&self) -> f64 {
        self.grid.trapezoid(&self.values[0])
    }

    /// Column table `y, f, f', ..., f^{(k)}`.
    pub fn columns(&self) -> (Vec<String>, Vec<Vec<f64>>) {
        let mut header = vec!["y".to_string(), "f".to_string()];
        header.extend((1..=self.order()).map(|l| format!("f{l}")));
        let rows = self
            .grid
            .nodes()
            .into_iter()
            .enumerate()
            .map(|(j, y)| std::iter::once(y).chain(self.values.iter().map(|r| r[j])).collect())
            .collect();
        (header, rows)
    }
}

/// `sum_{l <= k} int |f^{(l)}|` by the trapezoidal rule.
pub fn sobolev_norm(g: &GridDensity, k: usize) -> Result<f64> {
    if k > g.order() {
        return Err(Error::Contract(format!("stack holds order {} but norm needs {k}", g.order())));
    }
    Ok(g.values[..=k].iter().map(|row| g.grid.trapezoid_abs(row)).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Density read as zero outside the grid window.
    #[default]
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    /// Poissonization index.
    pub i: usize,
    pub dt: f64,
    /// Truncation index of `G`; the largest declared set by default.
    #[serde(default)]
    pub trunc: Option<usize>,
    #[serde(default = "default_quad_nodes")]
    pub quad_nodes: usize,
    #[serde(default = "default_interp")]
    pub interp_degree: usize,
    #[serde(default)]
    pub boundary: Boundary,
    #[serde(default = "default_stability")]
    pub stability: f64,
    /// Largest q-weighted fraction of jump preimages allowed outside the
    /// window, averaged over the nodes. Roughly the mean jump size over the
    /// window length for one-sided jumps.
    #[serde(default = "default_window_tolerance")]
    pub window_tolerance: f64,
}

fn default_quad_nodes() -> usize {
    256
}
fn default_interp() -> usize {
    3
}
fn default_stability() -> f64 {
    0.5
}
fn default_window_tolerance() -> f64 {
    0.1
}

impl EvolutionConfig {
    pub fn new(i: usize, dt: f64) -> Self {
        EvolutionConfig {
            i,
            dt,
            trunc: None,
            quad_nodes: default_quad_nodes(),
            interp_degree: default_interp(),
            boundary: Boundary::Zero,
            stability: default_stability(),
            window_tolerance: default_window_tolerance(),
        }
    }

    fn truncation(&self, coeffs: &CoefficientSet) -> Result<Interval> {
        coeffs.measure.truncation(self.trunc.unwrap_or(coeffs.measure.truncations.len()))
    }

    /// Lipschitz constant `2 i + 2 gamma_bar q(G)` of the bounded generator.
    pub fn lipschitz(&self, coeffs: &CoefficientSet) -> Result<f64> {
        let g = self.truncation(coeffs)?;
        Ok(2.0 * self.i as f64 + 2.0 * coeffs.rate_bound() * coeffs.measure.mass_on(&g))
    }

    /// Largest stable step for this configuration.
    pub fn max_stable_dt(&self, coeffs: &CoefficientSet) -> Result<f64> {
        Ok(self.stability / self.lipschitz(coeffs)?)
    }
}

/// Gauss–Legendre nodes over `G` with panel edges at the breakpoints of the
/// jump amplitude and density, as `(z, w * rho(z))`.
pub(crate) fn jump_rule(coeffs: &CoefficientSet, g: &Interval, nodes: usize) -> Vec<(f64, f64)> {
    const PER_PANEL: usize = 16;
    let mut breaks = vec![g.lo, g.hi];
    for t in &coeffs.jump.terms {
        breaks.extend(t.z.breakpoints());
    }
    breaks.extend(coeffs.measure.density.breakpoints());
    breaks.retain(|b| b.is_finite() && *b >= g.lo && *b <= g.hi);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let panels = nodes.div_ceil(PER_PANEL).max(breaks.len() - 1);
    let gl = GaussLegendre::new(PER_PANEL);
    let length = g.hi - g.lo;
    let mut out = Vec::with_capacity(panels * PER_PANEL);
    for w in breaks.windows(2) {
        let count = ((panels as f64 * (w[1] - w[0]) / length).round() as usize).max(1);
        let width = (w[1] - w[0]) / count as f64;
        for p in 0..count {
            let a = w[0] + p as f64 * width;
            for (z, wt) in gl.mapped(a, a + width) {
                let rho = coeffs.measure.density_at(z);
                if rho != 0.0 {
                    out.push((z, wt * rho));
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
struct Read {
    first: i64,
    weights: [f64; MAX_STENCIL],
}

/// Precomputed tables of `L^{i*}` on one grid for stacks of order `k`.
#[derive(Debug, Clone)]
pub struct AdjointOperator {
    pub grid: UniformGrid,
    pub k: usize,
    pub i: usize,
    pub q_mass: f64,
    stencil_len: usize,
    tri: usize,
    per_node: usize,
    drift_active: bool,
    drift_reads: Vec<Read>,
    /// `c^beta[l][r]` per node, lower-triangular.
    drift_coeffs: Vec<f64>,
    jump_reads: Vec<Read>,
    /// `D[l][s]` per (node, z) pair, lower-triangular.
    jump_coeffs: Vec<f64>,
    /// `q(G) C(l, s) gamma^{(l-s)}(y)` per node, lower-triangular.
    local: Vec<f64>,
    /// q-weighted fraction of jump preimages outside the window.
    pub outside_fraction: f64,
}

#[inline]
fn tri_index(l: usize, s: usize) -> usize {
    l * (l + 1) / 2 + s
}

impl AdjointOperator {
    pub fn new(coeffs: &CoefficientSet, grid: &UniformGrid, k: usize, cfg: &EvolutionConfig) -> Result<Self> {
        grid.validate()?;
        if cfg.interp_degree.is_multiple_of(2) || cfg.interp_degree + 1 > MAX_STENCIL {
            return Err(Error::Config(format!(
                "interpolation degree {} must be odd and at most {}",
                cfg.interp_degree,
                MAX_STENCIL - 1
            )));
        }
        let i0 = coeffs.min_poisson_index();
        if cfg.i == 0 || (cfg.i as f64) < i0 {
            return Err(Error::Precondition(format!("Poissonization index i = {} is below i_0 = {i0}", cfg.i)));
        }
        let g = cfg.truncation(coeffs)?;
        let rule = jump_rule(coeffs, &g, cfg.quad_nodes);
        let q_mass: f64 = rule.iter().map(|(_, w)| w).sum();
        let nodes = grid.nodes();

        // the jump map must be invertible for every quadrature mark
        let probe = coeffs.audit.nodes();
        for &(z, _) in &rule {
            for &y in probe.iter().step_by(10).chain(nodes.iter().step_by(16)) {
                let d = 1.0 + coeffs.jump.dy(y, z);
                if d <= NEAR_SINGULAR {
                    return Err(Error::NearSingular(format!(
                        "1 + h'(y, z) = {d} at (y, z) = ({y}, {z}): y -> y + h(y, z) is not invertible"
                    )));
                }
            }
        }

        let tri = (k + 1) * (k + 2) / 2;
        let len = cfg.interp_degree + 1;
        let i_f = cfg.i as f64;
        let drift_active = !coeffs.drift.is_zero();
        let read = |x: f64| {
            let s = grid.stencil(x, cfg.interp_degree);
            Read { first: s.first, weights: s.weights }
        };
        let tol = 1e-13;

        struct NodeTables {
            drift_read: Read,
            drift: Vec<f64>,
            reads: Vec<Read>,
            coeffs: Vec<f64>,
            local: Vec<f64>,
            outside: f64,
        }
        let per_node: Vec<NodeTables> = nodes
            .par_iter()
            .map(|&y| -> Result<NodeTables> {
                let mut drift = vec![0.0; tri];
                let drift_read = if drift_active {
                    let st = tau_i_stack_unchecked(coeffs, y, i_f, k + 1, tol)?;
                    for l in 0..=k {
                        let c = chain_coefficients(&st.d, l);
                        for r in 0..=l {
                            drift[tri_index(l, r)] = c[r];
                        }
                    }
                    read(st.d[0])
                } else {
                    Read { first: 0, weights: [0.0; MAX_STENCIL] }
                };
                let mut reads = Vec::with_capacity(rule.len());
                let mut cs = Vec::with_capacity(rule.len() * tri);
                let mut outside = 0.0;
                for &(z, w) in &rule {
                    let t = solve_tau(coeffs, y, z, tol).map_err(|e| match e {
                        Error::DomainEscape(msg) => Error::NearSingular(format!("tau({y}, {z}) does not exist: {msg}")),
                        other => other,
                    })?;
                    let mut fwd = coeffs.jump.y_derivatives(t, z, k + 1);
                    fwd[0] += t;
                    fwd[1] += 1.0;
                    let tau = crate::calculus::inverse_derivatives(&DerivativeStack { point: t, d: fwd }, k + 1)?;
                    let gam = coeffs.rate.derivatives(t, k);
                    if !grid.contains(t) {
                        outside += w;
                    }
                    reads.push(read(t));
                    for l in 0..=k {
                        let c = chain_coefficients(&tau.d, l);
                        for s in 0..=l {
                            let d: f64 = (s..=l).map(|r| c[r] * binomial(r, s) * gam[r - s]).sum();
                            cs.push(w * d);
                        }
                    }
                }
                let gy = coeffs.rate.derivatives(y, k);
                let mut local = vec![0.0; tri];
                for l in 0..=k {
                    for s in 0..=l {
                        local[tri_index(l, s)] = q_mass * binomial(l, s) * gy[l - s];
                    }
                }
                Ok(NodeTables { drift_read, drift, reads, coeffs: cs, local, outside })
            })
            .collect::<Result<_>>()?;

        let outside_fraction = if q_mass > 0.0 {
            per_node.iter().map(|t| t.outside).sum::<f64>() / (q_mass * nodes.len() as f64)
        } else {
            0.0
        };
        if outside_fraction > cfg.window_tolerance {
            return Err(Error::WindowTooSmall(format!(
                "{:.2}% of the jump preimages fall outside [{}, {}]",
                100.0 * outside_fraction,
                grid.lo,
                grid.hi
            )));
        }
        let mut op = AdjointOperator {
            grid: *grid,
            k,
            i: cfg.i,
            q_mass,
            stencil_len: len,
            tri,
            per_node: rule.len(),
            drift_active,
            drift_reads: Vec::with_capacity(nodes.len()),
            drift_coeffs: Vec::with_capacity(nodes.len() * tri),
            jump_reads: Vec::with_capacity(nodes.len() * rule.len()),
            jump_coeffs: Vec::with_capacity(nodes.len() * rule.len() * tri),
            local: Vec::with_capacity(nodes.len() * tri),
            outside_fraction,
        };
        for t in per_node {
            op.drift_reads.push(t.drift_read);
            op.drift_coeffs.extend(t.drift);
            op.jump_reads.extend(t.reads);
            op.jump_coeffs.extend(t.coeffs);
            op.local.extend(t.local);
        }
        Ok(op)
    }

    #[inline]
    fn interp(&self, read: &Read, values: &[f64]) -> f64 {
        let n = values.len() as i64;
        let len = self.stencil_len;
        if read.first >= 0 && read.first + len as i64 <= n {
            let base = read.first as usize;
            let mut acc = 0.0;
            for m in 0..len {
                acc += read.weights[m] * values[base + m];
            }
            acc
        } else {
            let mut acc = 0.0;
            for m in 0..len {
                let j = read.first + m as i64;
                if j >= 0 && j < n {
                    acc += read.weights[m] * values[j as usize];
                }
            }
            acc
        }
    }

    /// Rate `L^{i*}` applied to every level of the stack at node `j`.
    fn node_rate(&self, j: usize, values: &[Vec<f64>], out: &mut [f64]) {
        let k = self.k;
        let tri = self.tri;
        let mut read_vals = [0.0; crate::jet::MAX_ORDER + 1];
        out.iter_mut().for_each(|v| *v = 0.0);
        let base = j * self.per_node;
        for m in 0..self.per_node {
            let read = &self.jump_reads[base + m];
            if read.first + self.stencil_len as i64 <= 0 || read.first >= values[0].len() as i64 {
                continue;
            }
            for (s, rv) in read_vals.iter_mut().enumerate().take(k + 1) {
                *rv = self.interp(read, &values[s]);
            }
            let c = &self.jump_coeffs[(base + m) * tri..(base + m + 1) * tri];
            for (l, o) in out.iter_mut().enumerate() {
                let row = &c[tri_index(l, 0)..=tri_index(l, l)];
                *o += row.iter().zip(&read_vals[..=l]).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        let loc = &self.local[j * tri..(j + 1) * tri];
        for (l, o) in out.iter_mut().enumerate() {
            for s in 0..=l {
                *o -= loc[tri_index(l, s)] * values[s][j];
            }
        }
        if self.drift_active {
            let i = self.i as f64;
            let read = &self.drift_reads[j];
            for (s, rv) in read_vals.iter_mut().enumerate().take(k + 1) {
                *rv = self.interp(read, &values[s]);
            }
            let c = &self.drift_coeffs[j * tri..(j + 1) * tri];
            for (l, o) in out.iter_mut().enumerate() {
                let transported: f64 = (0..=l).map(|r| c[tri_index(l, r)] * read_vals[r]).sum();
                *o += i * (transported - values[l][j]);
            }
        }
    }

    /// `L^{i*}` applied to a stack of the operator's order.
    pub fn apply(&self, g: &GridDensity) -> Result<Vec<Vec<f64>>> {
        if g.grid != self.grid || g.order() < self.k {
            return Err(Error::Contract("density grid or order does not match the operator".into()));
        }
        let m = self.grid.points;
        let k = self.k;
        let mut flat = vec![0.0; m * (k + 1)];
        flat.par_chunks_mut(k + 1).enumerate().for_each(|(j, out)| self.node_rate(j, &g.values, out));
        Ok((0..=k).map(|l| (0..m).map(|j| flat[j * (k + 1) + l]).collect()).collect())
    }

    /// One explicit Euler step of size `dt`.
    pub fn euler_step(&self, f: &mut GridDensity, dt: f64) -> Result<()> {
        let rate = self.apply(f)?;
        for (row, r) in f.values.iter_mut().zip(rate) {
            row.iter_mut().zip(r).for_each(|(v, d)| *v += dt * d);
        }
        f.time += dt;
        Ok(())
    }
}

/// `L^{i*} g` at the grid nodes, for every level of the stack.
pub fn apply_adjoint(coeffs: &CoefficientSet, g: &GridDensity, cfg: &EvolutionConfig) -> Result<Vec<Vec<f64>>> {
    AdjointOperator::new(coeffs, &g.grid, g.order(), cfg)?.apply(g)
}

/// `L^i phi(y)` for a test function, with its own quadrature over `G`.
pub fn generator_apply(
    coeffs: &CoefficientSet,
    phi: &dyn Fn(f64) -> f64,
    y: f64,
    cfg: &EvolutionConfig,
) -> Result<f64> {
    let g = cfg.truncation(coeffs)?;
    let rule = jump_rule(coeffs, &g, 2 * cfg.quad_nodes);
    let i = cfg.i as f64;
    let drift = i * (phi(y + coeffs.drift.value(y) / i) - phi(y));
    let py = phi(y);
    let jumps: f64 = rule.iter().map(|&(z, w)| w * (phi(y + coeffs.jump.value(y, z)) - py)).sum();
    Ok(drift + coeffs.rate_at(y) * jumps)
}

/// `(int g L^i phi, int phi L^{i*} g)` over the grid window.
pub fn duality_pair(
    coeffs: &CoefficientSet,
    g: &GridDensity,
    op: &AdjointOperator,
    cfg: &EvolutionConfig,
    phi: &dyn Fn(f64) -> f64,
) -> Result<(f64, f64)> {
    let nodes = g.grid.nodes();
    let lphi: Vec<f64> = nodes.iter().map(|&y| generator_apply(coeffs, phi, y, cfg)).collect::<Result<_>>()?;
    let lhs_vals: Vec<f64> = lphi.iter().zip(&g.values[0]).map(|(a, b)| a * b).collect();
    let rate = op.apply(g)?;
    let rhs_vals: Vec<f64> = nodes.iter().zip(&rate[0]).map(|(y, r)| phi(*y) * r).collect();
    Ok((g.grid.trapezoid(&lhs_vals), g.grid.trapezoid(&rhs_vals)))
}

fn check_stability(coeffs: &CoefficientSet, cfg: &EvolutionConfig) -> Result<()> {
    let lip = cfg.lipschitz(coeffs)?;
    if !(cfg.dt > 0.0) || cfg.dt * lip > cfg.stability {
        return Err(Error::Config(format!(
            "time step {} violates dt (2i + 2 gamma_bar q(G)) = {} <= {}; use dt <= {}",
            cfg.dt,
            cfg.dt * lip,
            cfg.stability,
            cfg.stability / lip
        )));
    }
    Ok(())
}

fn advance(op: &AdjointOperator, f: &mut GridDensity, t_end: f64, dt: f64, step0: usize) -> Result<usize> {
    let span = t_end - f.time;
    if span <= 0.0 {
        return Ok(step0);
    }
    let steps = (span / dt - 1e-9).ceil().max(1.0) as usize;
    let h = span / steps as f64;
    for s in 0..steps {
        op.euler_step(f, h)?;
        if f.values.iter().any(|row| row.iter().any(|v| !v.is_finite())) {
            return Err(Error::Divergence { step: step0 + s + 1 });
        }
    }
    f.time = t_end;
    Ok(step0 + steps)
}

/// Explicit Euler integration of `d/dt f = L^{i*} f` for the whole stack.
pub fn evolve(coeffs: &CoefficientSet, f0: &GridDensity, t_end: f64, cfg: &EvolutionConfig) -> Result<GridDensity> {
    Ok(evolve_checkpoints(coeffs, f0, &[t_end], cfg)?.pop().unwrap_or_else(|| f0.clone()))
}

/// States at each of the sorted times.
pub fn evolve_checkpoints(
    coeffs: &CoefficientSet,
    f0: &GridDensity,
    times: &[f64],
    cfg: &EvolutionConfig,
) -> Result<Vec<GridDensity>> {
    check_stability(coeffs, cfg)?;
    let op = AdjointOperator::new(coeffs, &f0.grid, f0.order(), cfg)?;
    let mut f = f0.clone();
    let mut step = 0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        step = advance(&op, &mut f, t, cfg.dt, step)?;
        out.push(f.clone());
    }
    Ok(out)
}

/// Picard iterates `f^{m+1}(t) = f_0 + int_0^t L^{i*} f^m(s) ds` on
/// `substeps` equal time cells (trapezoidal in time); a validation mode
/// for the explicit integrator on short horizons.
pub fn picard(
    coeffs: &CoefficientSet,
    f0: &GridDensity,
    t_end: f64,
    cfg: &EvolutionConfig,
    iterations: usize,
    substeps: usize,
) -> Result<GridDensity> {
    let op = AdjointOperator::new(coeffs, &f0.grid, f0.order(), cfg)?;
    let h = t_end / substeps as f64;
    let mut path: Vec<GridDensity> = vec![f0.clone(); substeps + 1];
    for _ in 0..iterations {
        let rates: Vec<Vec<Vec<f64>>> = path.iter().map(|f| op.apply(f)).collect::<Result<_>>()?;
        let mut next = Vec::with_capacity(substeps + 1);
        let mut acc = f0.clone();
        next.push(acc.clone());
        for s in 1..=substeps {
            for (l, row) in acc.values.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v += 0.5 * h * (rates[s - 1][l][j] + rates[s][l][j]);
                }
            }
            acc.time = s as f64 * h;
            next.push(acc.clone());
        }
        path = next;
    }
    Ok(path.pop().unwrap())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthCheckpoint {
    pub t: f64,
    pub norm: f64,
    pub norm_doubled_i: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub pass: bool,
    pub k: usize,
    pub i: usize,
    /// Rate fitted on the first quarter of the horizon at `i`.
    pub c_hat: f64,
    /// Same fit at `2 i`.
    pub c_hat_doubled_i: f64,
    pub envelope_holds: bool,
    pub rate_stable: bool,
    pub max_mass_drift: f64,
    /// `||f^{(l)} - D f^{(l-1)}||_1 / ||f^{(l)}||_1` at the horizon, `l = 1..=k`.
    pub stack_consistency: Vec<f64>,
    pub stack_resolved: bool,
    pub checkpoints: Vec<GrowthCheckpoint>,
    pub flags: Vec<String>,
}

/// Envelope factor on the fitted rate.
pub const ENVELOPE_FACTOR: f64 = 1.1;
/// Relative tolerance on the rate under `i -> 2 i`.
pub const RATE_TOLERANCE: f64 = 0.2;
/// Absolute floor for comparing rates near zero.
pub const RATE_FLOOR: f64 = 0.02;
/// Largest relative stack inconsistency accepted as resolved.
pub const STACK_TOLERANCE: f64 = 0.05;

fn fit_rate(ts: &[f64], norms: &[f64], t_end: f64) -> f64 {
    let n0 = norms[0];
    let (mut num, mut den) = (0.0, 0.0);
    for (t, n) in ts.iter().zip(norms).skip(1) {
        if *t <= 0.25 * t_end + 1e-12 {
            num += t * (n / n0).ln();
            den += t * t;
        }
    }
    if den > 0.0 {
        (num / den).max(0.0)
    } else {
        0.0
    }
}

/// Relative L1 gap between each evolved level and the finite difference of
/// the level below.
pub fn stack_consistency(f: &GridDensity) -> Vec<f64> {
    (1..=f.order())
        .map(|l| {
            let fd = finite_difference(&f.grid, &f.values[l - 1]);
            let diff: Vec<f64> = fd.iter().zip(&f.values[l]).map(|(a, b)| a - b).collect();
            f.grid.trapezoid_abs(&diff) / f.grid.trapezoid_abs(&f.values[l]).max(1e-300)
        })
        .collect()
}

/// Tracks `||f(t)||_{W^{k,1}}` at `checkpoints` equally spaced times for
/// Poissonization indices `i` and `2 i`.
pub fn norm_growth_audit(
    coeffs: &CoefficientSet,
    f0: &GridDensity,
    t_end: f64,
    cfg: &EvolutionConfig,
    checkpoints: usize,
) -> Result<GrowthReport> {
    if checkpoints < 4 {
        return Err(Error::Precondition("growth audit needs at least 4 checkpoints".into()));
    }
    let k = f0.order();
    let times: Vec<f64> = (1..=checkpoints).map(|c| t_end * c as f64 / checkpoints as f64).collect();
    let states = evolve_checkpoints(coeffs, f0, &times, cfg)?;

    let mut doubled = cfg.clone();
    doubled.i = 2 * cfg.i;
    doubled.dt = cfg.dt.min(cfg.dt * cfg.lipschitz(coeffs)? / doubled.lipschitz(coeffs)?);
    let states2 = evolve_checkpoints(coeffs, f0, &times, &doubled)?;

    let n0 = sobolev_norm(f0, k)?;
    let mut ts = vec![0.0];
    let mut norms = vec![n0];
    let mut norms2 = vec![n0];
    let mut rows = Vec::with_capacity(checkpoints);
    let mass0 = f0.mass();
    let mut drift = 0.0f64;
    for (a, b) in states.iter().zip(&states2) {
        let (na, nb) = (sobolev_norm(a, k)?, sobolev_norm(b, k)?);
        ts.push(a.time);
        norms.push(na);
        norms2.push(nb);
        drift = drift.max((a.mass() - mass0).abs());
        rows.push(GrowthCheckpoint { t: a.time, norm: na, norm_doubled_i: nb, mass: a.mass() });
    }
    let c_hat = fit_rate(&ts, &norms, t_end);
    let c_hat2 = fit_rate(&ts, &norms2, t_end);
    let envelope = |norms: &[f64], c: f64| {
        ts.iter().zip(norms).all(|(t, n)| *n <= n0 * (ENVELOPE_FACTOR * c * t).exp() * (1.0 + 1e-9))
    };
    let envelope_holds = envelope(&norms, c_hat) && envelope(&norms2, c_hat2);
    let rate_stable = (c_hat - c_hat2).abs() <= RATE_TOLERANCE * c_hat.max(c_hat2) + RATE_FLOOR;
    let stack = states.last().map(stack_consistency).unwrap_or_default();
    let stack_resolved = stack.iter().all(|v| *v <= STACK_TOLERANCE);

    let mut flags = Vec::new();
    if !envelope_holds {
        flags.push("norm leaves the exponential envelope".into());
    }
    if !rate_stable {
        flags.push(format!("fitted rate moves from {c_hat:.4} to {c_hat2:.4} under i -> 2i"));
    }
    if !stack_resolved {
        flags.push("derivative stack is not resolved by the grid (norm blow-up)".into());
    }
    Ok(GrowthReport {
        pass: envelope_holds && rate_stable && stack_resolved,
        k,
        i: cfg.i,
        c_hat,
        c_hat_doubled_i: c_hat2,
        envelope_holds,
        rate_stable,
        max_mass_drift: drift,
        stack_consistency: stack,
        stack_resolved,
        checkpoints: rows,
        flags,
    })
}

/// Window covering `[mean - 6.2 std, mean + 6.2 std]` (outside mass below
/// `1e-9`), widened by `t sup |b|` and by `t gamma_bar int_G eta dq`.
pub fn suggest_window(coeffs: &CoefficientSet, mean: f64, std: f64, t_end: f64) -> Result<(f64, f64)> {
    let g = coeffs.measure.truncation(coeffs.measure.truncations.len())?;
    let sup_b = coeffs.audit.nodes().iter().map(|y| coeffs.drift.value(*y).abs()).fold(0.0, f64::max);
    let jumps: f64 = jump_rule(coeffs, &g, 256).iter().map(|(z, w)| w * coeffs.eta.value(*z).abs()).sum();
    let pad = t_end * (sup_b + coeffs.rate_bound() * jumps);
    Ok((mean - 6.2 * std - pad, mean + 6.2 * std + pad))
}
