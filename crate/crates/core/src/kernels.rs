//! Regularizing kernel family `mu_n`.
//!
//! With `a(y)` the endpoint of the half-line `I(y)` on which `q(dz) >= dz`,
//! the truncated measure is `q_n(y, dz) = phi_n(gamma(y) (z - a(y))) dz`
//! (mirrored for a left half-line), and `mu_n(y, .)` is its image under
//! `z -> h(y, z)` scaled by `gamma(y)`. Its density in `u` is
//! `gamma(y) phi_n(gamma(y) (xi(y, u) - a(y))) |xi'_u(y, u)|`, with `xi(y, .)`
//! the inverse of `h(y, .)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calculus::{binomial, chain_coefficients, inverse_derivatives, DerivativeStack};
use crate::error::{Error, Result};
use crate::fokker_planck::GridDensity;
use crate::grid::UniformGrid;
use crate::jet::Jet;
use crate::model::{ls_slope, CoefficientSet, Side};
use crate::quadrature::GaussLegendre;
use crate::roots::solve_monotone;

/// Polynomial smoothstep `S(x) = x^{k+1} sum_j C(k+j, j) (1-x)^j` on `[0, 1]`,
/// with `S(x) + S(1 - x) = 1` and `k` vanishing derivatives at both ends.
#[derive(Debug, Clone, PartialEq)]
struct Smoothstep {
    coeffs: Vec<f64>,
}

impl Smoothstep {
    fn new(k: usize) -> Self {
        let mut coeffs = vec![0.0; 2 * k + 2];
        for j in 0..=k {
            let cj = binomial(k + j, j);
            for m in 0..=j {
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                coeffs[k + 1 + m] += cj * sign * binomial(j, m);
            }
        }
        Smoothstep { coeffs }
    }

    fn eval_jet(&self, x: &Jet) -> Jet {
        self.coeffs.iter().rev().fold(Jet::constant(0.0, x.order()), |acc, c| (acc * *x).add_const(*c))
    }

    fn value(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }
}

/// Cutoff `phi_n`: zero off `(1, n + 3)`, one on `[2, n + 2]`, smoothstep
/// ramps of unit width in between.
#[derive(Debug, Clone, PartialEq)]
pub struct CutoffFamily {
    pub n: usize,
    pub k: usize,
    step: Smoothstep,
    /// `bounds[l] = sup |phi_n^{(l)}|`, identical for every `n`.
    pub bounds: Vec<f64>,
}

pub fn make_cutoff(n: usize, k: usize) -> CutoffFamily {
    let step = Smoothstep::new(k);
    let bounds = (0..=k)
        .map(|l| {
            (0..=4000)
                .map(|j| step.eval_jet(&Jet::variable(j as f64 / 4000.0, k)).derivatives()[l].abs())
                .fold(0.0, f64::max)
        })
        .collect();
    CutoffFamily { n: n.max(1), k, step, bounds }
}

impl CutoffFamily {
    pub fn plateau(&self) -> (f64, f64) {
        (2.0, self.n as f64 + 2.0)
    }

    pub fn support(&self) -> (f64, f64) {
        (1.0, self.n as f64 + 3.0)
    }

    /// Exact integral `int phi_n = n + 1`.
    pub fn mass(&self) -> f64 {
        self.n as f64 + 1.0
    }

    pub fn value(&self, z: f64) -> f64 {
        let top = self.n as f64 + 3.0;
        if z <= 1.0 || z >= top {
            0.0
        } else if z < 2.0 {
            self.step.value(z - 1.0)
        } else if z <= top - 1.0 {
            1.0
        } else {
            self.step.value(top - z)
        }
    }

    /// `phi_n^{(l)}(z)` for `l = 0..=order`.
    pub fn derivatives(&self, z: f64, order: usize) -> Vec<f64> {
        let top = self.n as f64 + 3.0;
        let mut out = vec![0.0; order + 1];
        if z <= 1.0 || z >= top {
            return out;
        }
        if (2.0..=top - 1.0).contains(&z) {
            out[0] = 1.0;
            return out;
        }
        let (x, sign) = if z < 2.0 { (z - 1.0, 1.0) } else { (top - z, -1.0) };
        let d = self.step.eval_jet(&Jet::variable(x, order)).derivatives();
        for (l, o) in out.iter_mut().enumerate() {
            *o = d[l] * if l % 2 == 1 { sign } else { 1.0 };
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CutoffMode {
    #[default]
    Smooth,
    /// Acceptance forced to one on the whole truncation; used to check that
    /// the extra mark is then vacuous.
    Unit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelDecomposition {
    pub coeffs: CoefficientSet,
    pub ns: Vec<usize>,
    pub k: usize,
    pub mode: CutoffMode,
    cutoffs: Vec<CutoffFamily>,
}

const PANEL_NODES: usize = 16;

impl KernelDecomposition {
    /// Kernels for every `n` in `ns`; requires `q(dz) >= dz` on `I(y)`
    /// (checked on the audit window) and `gamma > 0` there.
    pub fn build(coeffs: &CoefficientSet, ns: &[usize], k: usize) -> Result<Self> {
        if ns.is_empty() || ns.contains(&0) {
            return Err(Error::Precondition("kernel indices must be >= 1".into()));
        }
        coeffs.measure.kernel_side()?;
        let n_max = *ns.iter().max().unwrap();
        for y in coeffs.audit.nodes().into_iter().step_by(50) {
            let g = coeffs.rate_at(y);
            if !(g > 0.0) {
                return Err(Error::Precondition(format!("gamma({y}) = {g} must be positive for kernels")));
            }
            let a = coeffs.measure.endpoint_at(y)?;
            let width = (n_max as f64 + 3.0) / g;
            for j in 1..=64 {
                let s = width * j as f64 / 64.0;
                let z = match coeffs.measure.kernel_side()? {
                    Side::Right => a + s,
                    Side::Left => a - s,
                };
                if coeffs.measure.support.contains(z) && coeffs.measure.density_at(z) < 1.0 - 1e-12 {
                    return Err(Error::Precondition(format!(
                        "q density {} < 1 at z = {z}; kernels need q(dz) >= dz on I(y)",
                        coeffs.measure.density_at(z)
                    )));
                }
            }
        }
        let mut sorted = ns.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        Ok(KernelDecomposition {
            coeffs: coeffs.clone(),
            cutoffs: sorted.iter().map(|&n| make_cutoff(n, k)).collect(),
            ns: sorted,
            k,
            mode: CutoffMode::Smooth,
        })
    }

    pub fn with_mode(mut self, mode: CutoffMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn cutoff(&self, n: usize) -> Result<&CutoffFamily> {
        self.ns
            .iter()
            .position(|&m| m == n)
            .map(|idx| &self.cutoffs[idx])
            .ok_or_else(|| Error::Contract(format!("kernel n = {n} was not built (have {:?})", self.ns)))
    }

    /// Scaled coordinate `s = gamma(y) (z - a(y))` (mirrored on a left half-line).
    fn scaled(&self, y: f64, z: f64) -> Result<(f64, f64)> {
        let g = self.coeffs.rate_at(y);
        let a = self.coeffs.measure.endpoint_at(y)?;
        Ok(match self.coeffs.measure.kernel_side()? {
            Side::Right => (g * (z - a), g),
            Side::Left => (g * (a - z), g),
        })
    }

    /// `z` with scaled coordinate `s`.
    fn unscaled(&self, y: f64, s: f64) -> Result<f64> {
        let g = self.coeffs.rate_at(y);
        let a = self.coeffs.measure.endpoint_at(y)?;
        Ok(match self.coeffs.measure.kernel_side()? {
            Side::Right => a + s / g,
            Side::Left => a - s / g,
        })
    }

    /// Range of `z` where `q_n(y, .)` may be positive.
    pub fn z_support(&self, y: f64, n: usize) -> Result<(f64, f64)> {
        let c = self.cutoff(n)?;
        let (lo, hi) = c.support();
        let (za, zb) = (self.unscaled(y, lo)?, self.unscaled(y, hi)?);
        Ok((za.min(zb), za.max(zb)))
    }

    /// Density of `q_n(y, dz)` w.r.t. Lebesgue measure.
    pub fn q_n_density(&self, y: f64, z: f64, n: usize) -> Result<f64> {
        let (s, _) = self.scaled(y, z)?;
        Ok(self.cutoff(n)?.value(s))
    }

    /// Acceptance probability `d_n(y, z) = phi_n(gamma(y) (z - a)) / rho(z)`
    /// of a jump with mark `z` from state `y`.
    pub fn acceptance(&self, y: f64, z: f64, n: usize) -> Result<f64> {
        if self.mode == CutoffMode::Unit {
            return Ok(1.0);
        }
        let phi = self.q_n_density(y, z, n)?;
        if phi == 0.0 {
            return Ok(0.0);
        }
        Ok((phi / self.coeffs.measure.density_at(z)).min(1.0))
    }

    /// `(sign of h'_z, h(y, z_lo), h(y, z_hi))` over the kernel support,
    /// failing if `h'_z` vanishes or changes sign there.
    fn monotone_image(&self, y: f64, n: usize) -> Result<(f64, f64, f64)> {
        let (zlo, zhi) = self.z_support(y, n)?;
        let samples = 32 * (n + 2);
        let mut sign = 0.0;
        for j in 0..=samples {
            let z = zlo + (zhi - zlo) * j as f64 / samples as f64;
            let d = self.coeffs.jump.dz(y, z);
            if d == 0.0 || !d.is_finite() || (sign != 0.0 && d.signum() != sign) {
                return Err(Error::DegenerateKernel(format!(
                    "h'_z(y, z) = {d} at (y, z) = ({y}, {z}); h(y, .) is not strictly monotone"
                )));
            }
            sign = d.signum();
        }
        Ok((sign, self.coeffs.jump.value(y, zlo), self.coeffs.jump.value(y, zhi)))
    }

    /// `xi(y, u)` on the image of `[z_lo, z_hi]`.
    fn xi(&self, y: f64, u: f64, zlo: f64, zhi: f64) -> Result<f64> {
        solve_monotone(
            |z| (self.coeffs.jump.value(y, z) - u, self.coeffs.jump.dz(y, z)),
            zlo,
            zhi,
            (zlo, zhi),
            1e-15 * u.abs(),
        )
    }

    /// `mu_n(y, u)` at each `u`; zero off the image of the kernel support.
    pub fn mu_density(&self, y: f64, n: usize, us: &[f64]) -> Result<Vec<f64>> {
        let (_, ha, hb) = self.monotone_image(y, n)?;
        let (zlo, zhi) = self.z_support(y, n)?;
        let (ulo, uhi) = (ha.min(hb), ha.max(hb));
        us.iter()
            .map(|&u| {
                if !(u > ulo && u < uhi) {
                    return Ok(0.0);
                }
                let z = self.xi(y, u, zlo, zhi)?;
                let (s, g) = self.scaled(y, z)?;
                Ok(g * self.cutoff(n)?.value(s) / self.coeffs.jump.dz(y, z).abs())
            })
            .collect()
    }

    /// `mu(y, u)`: the image of `gamma(y) q(dz)` without the cutoff, on the
    /// image of the kernel support.
    pub fn mu_full_density(&self, y: f64, n: usize, us: &[f64]) -> Result<Vec<f64>> {
        let (_, ha, hb) = self.monotone_image(y, n)?;
        let (zlo, zhi) = self.z_support(y, n)?;
        let (ulo, uhi) = (ha.min(hb), ha.max(hb));
        let g = self.coeffs.rate_at(y);
        us.iter()
            .map(|&u| {
                if !(u > ulo && u < uhi) {
                    return Ok(0.0);
                }
                let z = self.xi(y, u, zlo, zhi)?;
                Ok(g * self.coeffs.measure.density_at(z) / self.coeffs.jump.dz(y, z).abs())
            })
            .collect()
    }

    /// `(u, weight)` pairs of a composite Gauss–Legendre rule in `u`,
    /// with panels at the images of the cutoff breakpoints split `sub` times.
    fn u_rule(&self, y: f64, n: usize, sub: usize) -> Result<Vec<(f64, f64, f64)>> {
        let (zlo, zhi) = self.z_support(y, n)?;
        let gl = GaussLegendre::new(PANEL_NODES);
        let top = n + 3;
        let mut out = Vec::with_capacity((top - 1) * sub * PANEL_NODES);
        for j in 1..top {
            for m in 0..sub {
                let s0 = j as f64 + m as f64 / sub as f64;
                let s1 = j as f64 + (m + 1) as f64 / sub as f64;
                let u0 = self.coeffs.jump.value(y, self.unscaled(y, s0)?);
                let u1 = self.coeffs.jump.value(y, self.unscaled(y, s1)?);
                for (u, w) in gl.mapped(u0.min(u1), u0.max(u1)) {
                    let z = self.xi(y, u, zlo, zhi)?;
                    out.push((u, w, z));
                }
            }
        }
        Ok(out)
    }

    /// Total mass `mu_n(y, R) = gamma(y) q_n(y, G)`, by quadrature in `u`.
    ///
    /// The construction guarantees a mass in `[n, n + 2]`; anything outside
    /// `[n - 1e-6, n + 2 + 1e-6]` is reported as a construction bug.
    pub fn kernel_mass(&self, y: f64, n: usize) -> Result<f64> {
        self.monotone_image(y, n)?;
        let cutoff = self.cutoff(n)?;
        let mass: f64 = self
            .u_rule(y, n, 4)?
            .into_iter()
            .map(|(_, w, z)| {
                let (s, g) = self.scaled(y, z).unwrap_or((0.0, 0.0));
                w * g * cutoff.value(s) / self.coeffs.jump.dz(y, z).abs()
            })
            .sum();
        let (lo, hi) = (n as f64 - 1e-6, n as f64 + 2.0 + 1e-6);
        if !(mass >= lo && mass <= hi) {
            return Err(Error::KernelMass { y, n, mass, lo, hi });
        }
        Ok(mass)
    }

    /// `||mu_n(y, .)||_{W^{k,1}}` from analytic derivatives in `u`.
    ///
    /// With `psi(z) = gamma phi_n(gamma (z - a))`, `mu_n = s psi(xi) xi'` for
    /// the sign `s` of `xi'`, so `mu_n^{(l)} = s sum_r c_r psi^{(r)}(xi)` with
    /// the chain coefficients of `xi`. The integrals over `u` are taken in `z`
    /// through `du = |h'_z| dz`, on `panels` panels per unit of the scaled
    /// coordinate.
    pub fn sobolev_norm(&self, y: f64, n: usize, k: usize, panels: usize) -> Result<Vec<f64>> {
        self.monotone_image(y, n)?;
        let cutoff = self.cutoff(n)?;
        let gl = GaussLegendre::new(PANEL_NODES);
        let mut norms = vec![0.0; k + 1];
        let top = n + 3;
        for j in 1..top {
            for m in 0..panels {
                let s0 = j as f64 + m as f64 / panels as f64;
                let s1 = j as f64 + (m + 1) as f64 / panels as f64;
                let (za, zb) = (self.unscaled(y, s0)?, self.unscaled(y, s1)?);
                for (z, w) in gl.mapped(za.min(zb), za.max(zb)) {
                    let fwd = self.coeffs.jump.z_derivatives(y, z, k + 1);
                    let hz = fwd[1].abs();
                    let xi = inverse_derivatives(&DerivativeStack { point: z, d: fwd }, k + 1)?;
                    let (s, g) = self.scaled(y, z)?;
                    let dphi = cutoff.derivatives(s, k);
                    let dir: f64 = match self.coeffs.measure.kernel_side()? {
                        Side::Right => 1.0,
                        Side::Left => -1.0,
                    };
                    // psi^{(r)}(z) = gamma^{r+1} (±1)^r phi_n^{(r)}(s)
                    let psi: Vec<f64> = (0..=k).map(|r| g.powi(r as i32 + 1) * dir.powi(r as i32) * dphi[r]).collect();
                    for (l, norm) in norms.iter_mut().enumerate() {
                        let c = chain_coefficients(&xi.d, l);
                        let v: f64 = c.iter().zip(&psi).map(|(a, b)| a * b).sum();
                        *norm += w * v.abs() * hz;
                    }
                }
            }
        }
        Ok(norms)
    }

    /// First two Sobolev terms of `mu_n(y, .)` by finite differences on a
    /// uniform `u`-grid over the image, as a cross-check of the analytic path.
    pub fn sobolev_norm_on_grid(&self, y: f64, n: usize, points: usize) -> Result<[f64; 2]> {
        let (_, ha, hb) = self.monotone_image(y, n)?;
        let grid = UniformGrid::new(ha.min(hb), ha.max(hb), points)?;
        let vals = self.mu_density(y, n, &grid.nodes())?;
        let diff = crate::grid::finite_difference(&grid, &vals);
        Ok([grid.trapezoid_abs(&vals), grid.trapezoid_abs(&diff)])
    }

    /// Mean of `h(y, Z)` for `Z ~ q_n(y, dz) / q_n(y, G)`.
    pub fn conditional_mean_jump(&self, y: f64, n: usize) -> Result<f64> {
        let cutoff = self.cutoff(n)?;
        let mut num = 0.0;
        let mut den = 0.0;
        for (u, w, z) in self.u_rule(y, n, 4)? {
            let (s, g) = self.scaled(y, z)?;
            let m = w * g * cutoff.value(s) / self.coeffs.jump.dz(y, z).abs();
            num += m * u;
            den += m;
        }
        Ok(num / den)
    }
}

/// Density of the post-jump state `y_pre + h(y_pre, Z)`, `Z ~ q_n / q_n(G)`,
/// tabulated on `grid` and normalized to unit grid mass.
pub fn conditional_jump_density(
    kernels: &KernelDecomposition,
    y_pre: f64,
    n: usize,
    grid: &UniformGrid,
) -> Result<GridDensity> {
    let us: Vec<f64> = grid.nodes().into_iter().map(|y| y - y_pre).collect();
    let mut vals = kernels.mu_density(y_pre, n, &us)?;
    let mass = grid.trapezoid(&vals);
    if !(mass > 0.0) {
        return Err(Error::Resolution(format!("post-jump density from y = {y_pre} is not resolved on the grid")));
    }
    vals.iter_mut().for_each(|v| *v /= mass);
    Ok(GridDensity { grid: *grid, values: vec![vals], time: 0.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelAuditRow {
    pub n: usize,
    pub y: f64,
    pub mass: f64,
    /// `||mu_n(y, .)||_{W^{k,1}} / mass`.
    pub normalized_norm: f64,
    pub refinement_change: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelAuditReport {
    pub pass: bool,
    pub k: usize,
    pub p: f64,
    pub theta: f64,
    /// Smallest `C` with `normalized_norm <= C (1 + |y|^p) e^{theta n}` on the audit.
    pub fitted_c: f64,
    /// Least-squares growth rate of `log max_y normalized_norm / (1 + |y|^p)` in `n`.
    pub fitted_theta: f64,
    pub per_n_constant: Vec<(usize, f64)>,
    /// Relative gap between the analytic and finite-difference `W^{1,1}` parts.
    pub grid_cross_check: f64,
    pub rows: Vec<KernelAuditRow>,
}

/// Audits the Sobolev growth of the normalized kernels over `y_grid × n_list`.
pub fn kernel_sobolev_audit(
    kernels: &KernelDecomposition,
    y_grid: &UniformGrid,
    n_list: &[usize],
    k: usize,
    p: f64,
    theta: f64,
) -> Result<KernelAuditReport> {
    if n_list.is_empty() {
        return Err(Error::Precondition("kernel audit needs at least one n".into()));
    }
    let pairs: Vec<(usize, f64)> =
        n_list.iter().flat_map(|&n| y_grid.nodes().into_iter().map(move |y| (n, y))).collect();
    let rows: Vec<KernelAuditRow> = pairs
        .par_iter()
        .map(|&(n, y)| -> Result<KernelAuditRow> {
            let mass = kernels.kernel_mass(y, n)?;
            let coarse: f64 = kernels.sobolev_norm(y, n, k, 2)?.iter().sum();
            let fine: f64 = kernels.sobolev_norm(y, n, k, 4)?.iter().sum();
            let change = ((fine - coarse) / fine).abs();
            if !(change < 0.01) {
                return Err(Error::Resolution(format!(
                    "kernel norm at (y, n) = ({y}, {n}) moved by {:.2}% under refinement; \
                     raise the panel count",
                    100.0 * change
                )));
            }
            Ok(KernelAuditRow { n, y, mass, normalized_norm: fine / mass, refinement_change: change })
        })
        .collect::<Result<_>>()?;

    let mut per_n = Vec::new();
    for &n in n_list {
        let c =
            rows.iter().filter(|r| r.n == n).map(|r| r.normalized_norm / (1.0 + r.y.abs().powf(p))).fold(0.0, f64::max);
        per_n.push((n, c));
    }
    let fitted_c = per_n.iter().map(|(n, c)| c * (-theta * *n as f64).exp()).fold(0.0, f64::max);
    let fitted_theta = if per_n.len() >= 2 {
        ls_slope(&per_n.iter().map(|(n, c)| (*n as f64, c.ln())).collect::<Vec<_>>())
    } else {
        0.0
    };

    let n0 = n_list[0];
    let y0 = y_grid.node(y_grid.points / 2);
    let analytic = kernels.sobolev_norm(y0, n0, 1, 4)?;
    let gridded = kernels.sobolev_norm_on_grid(y0, n0, 20001)?;
    let grid_cross_check =
        ((analytic[0] + analytic[1]) - (gridded[0] + gridded[1])).abs() / (analytic[0] + analytic[1]);

    Ok(KernelAuditReport {
        pass: fitted_c.is_finite() && fitted_theta <= theta,
        k,
        p,
        theta,
        fitted_c,
        fitted_theta,
        per_n_constant: per_n,
        grid_cross_check,
        rows,
    })
}
