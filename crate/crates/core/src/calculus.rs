//! Inverse maps `tau`, `tau_i`, Faa di Bruno composition, inverse-function
//! derivatives and the transfer coefficients of the adjoint generator.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::MAX_ORDER;
use crate::model::CoefficientSet;
use crate::roots::solve_monotone;

/// Threshold on `|f'|` below which inversion is refused.
pub const NEAR_SINGULAR: f64 = 1e-10;

/// Half-width of the search window for the inverse maps.
pub const DEFAULT_WINDOW: f64 = 1e8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeStack {
    pub point: f64,
    pub d: Vec<f64>,
}

impl DerivativeStack {
    pub fn new(point: f64, d: Vec<f64>) -> Result<Self> {
        if d.is_empty() || !d[0].is_finite() {
            return Err(Error::Contract("derivative stack needs a finite value d[0]".into()));
        }
        Ok(DerivativeStack { point, d })
    }

    pub fn order(&self) -> usize {
        self.d.len() - 1
    }

    /// Stack of the identity map at `y`.
    pub fn identity(y: f64, order: usize) -> Self {
        let mut d = vec![0.0; order + 1];
        d[0] = y;
        if order >= 1 {
            d[1] = 1.0;
        }
        DerivativeStack { point: y, d }
    }
}

/// One block `x_{i_1} ... x_{i_r}` of a partial Bell polynomial with its
/// integer multiplicity.
#[derive(Debug, Clone)]
struct BellTerm {
    coeff: f64,
    parts: Vec<usize>,
}

/// `TABLE[l][r]` enumerates `B_{l,r}`: every integer partition of `l` into
/// `r` parts with multiplicity `l! / prod_j (m_j! (j!)^{m_j})`, which counts
/// the set partitions of `{1..l}` of that block-size shape.
fn bell_table() -> &'static Vec<Vec<Vec<BellTerm>>> {
    static TABLE: OnceLock<Vec<Vec<Vec<BellTerm>>>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = vec![Vec::new(); MAX_ORDER + 1];
        for (l, row) in table.iter_mut().enumerate() {
            *row = vec![Vec::new(); l + 1];
            let mut parts = Vec::new();
            enumerate_partitions(l, l, &mut parts, &mut |p| {
                row[p.len()].push(BellTerm { coeff: partition_count(l, p), parts: p.to_vec() });
            });
        }
        table
    })
}

fn enumerate_partitions(rest: usize, max: usize, parts: &mut Vec<usize>, emit: &mut impl FnMut(&[usize])) {
    if rest == 0 {
        emit(parts);
        return;
    }
    for part in (1..=rest.min(max)).rev() {
        parts.push(part);
        enumerate_partitions(rest - part, part, parts, emit);
        parts.pop();
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

fn partition_count(l: usize, parts: &[usize]) -> f64 {
    let mut denom = 1.0;
    let mut idx = 0;
    while idx < parts.len() {
        let j = parts[idx];
        let m = parts[idx..].iter().take_while(|&&p| p == j).count();
        denom *= factorial(m) * factorial(j).powi(m as i32);
        idx += m;
    }
    (factorial(l) / denom).round()
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64).round()
}

/// Partial Bell polynomial `B_{l,r}(x_1, x_2, ...)`, with `xs[j - 1] = x_j`.
pub fn partial_bell(l: usize, r: usize, xs: &[f64]) -> f64 {
    if l == 0 {
        return if r == 0 { 1.0 } else { 0.0 };
    }
    if r == 0 || r > l {
        return 0.0;
    }
    bell_table()[l][r].iter().map(|t| t.coeff * t.parts.iter().map(|&j| xs[j - 1]).product::<f64>()).sum()
}

/// Derivatives of `phi o tau` from the stack of `phi` at `tau(y)` and the
/// stack of `tau` at `y`.
pub fn faa_di_bruno(outer: &DerivativeStack, inner: &DerivativeStack) -> Result<DerivativeStack> {
    if outer.order() != inner.order() {
        return Err(Error::Contract(format!(
            "stack orders differ: outer {} vs inner {}",
            outer.order(),
            inner.order()
        )));
    }
    let order = inner.order();
    if order > MAX_ORDER {
        return Err(Error::Contract(format!("order {order} exceeds {MAX_ORDER}")));
    }
    let scale = 1.0 + inner.d[0].abs();
    if (outer.point - inner.d[0]).abs() > 1e-12 * scale {
        return Err(Error::Contract(format!("outer stack taken at {} but inner value is {}", outer.point, inner.d[0])));
    }
    let xs = &inner.d[1..];
    let mut d = vec![0.0; order + 1];
    d[0] = outer.d[0];
    for (l, dl) in d.iter_mut().enumerate().skip(1) {
        *dl = (1..=l).map(|r| outer.d[r] * partial_bell(l, r, xs)).sum();
    }
    Ok(DerivativeStack { point: inner.point, d })
}

/// Derivatives of `tau = f^{-1}` at the image point `f(forward.point)`.
///
/// Returns a stack with `point = f(x)`, `d[0] = x` and `d[l] = tau^{(l)}`,
/// obtained by differentiating `f(tau(y)) = y` and solving for the highest
/// derivative of `tau` at each order.
pub fn inverse_derivatives(forward: &DerivativeStack, order: usize) -> Result<DerivativeStack> {
    if order > forward.order() {
        return Err(Error::Contract(format!(
            "requested order {order} exceeds forward stack order {}",
            forward.order()
        )));
    }
    let f1 = forward.d[1];
    if !(f1.abs() >= NEAR_SINGULAR) {
        return Err(Error::NearSingular(format!("f'({}) = {f1}", forward.point)));
    }
    let mut d = vec![0.0; order + 1];
    d[0] = forward.point;
    if order >= 1 {
        d[1] = 1.0 / f1;
    }
    for l in 2..=order {
        let xs = &d[1..];
        let rest: f64 = (2..=l).map(|r| forward.d[r] * partial_bell(l, r, xs)).sum();
        d[l] = -rest / f1;
    }
    Ok(DerivativeStack { point: forward.d[0], d })
}

/// `tau(y, z)`: the solution of `tau + h(tau, z) = y`.
pub fn solve_tau(coeffs: &CoefficientSet, y: f64, z: f64, tol: f64) -> Result<f64> {
    let bound = coeffs.eta.value(z).abs();
    let width = if bound.is_finite() && bound > 0.0 { bound } else { 1.0 };
    solve_monotone(
        |t| (t + coeffs.jump.value(t, z) - y, 1.0 + coeffs.jump.dy(t, z)),
        y - width,
        y + width,
        (y - DEFAULT_WINDOW, y + DEFAULT_WINDOW),
        tol,
    )
}

fn check_index(coeffs: &CoefficientSet, i: usize) -> Result<()> {
    let i0 = coeffs.min_poisson_index();
    if i == 0 || (i as f64) < i0 {
        return Err(Error::Precondition(format!("Poissonization index i = {i} is below i_0 = {i0}")));
    }
    Ok(())
}

/// `tau_i(y)`: the solution of `tau_i + b(tau_i) / i = y`.
pub fn solve_tau_i(coeffs: &CoefficientSet, y: f64, i: usize, tol: f64) -> Result<f64> {
    check_index(coeffs, i)?;
    solve_tau_i_unchecked(coeffs, y, i as f64, tol)
}

pub(crate) fn solve_tau_i_unchecked(coeffs: &CoefficientSet, y: f64, i: f64, tol: f64) -> Result<f64> {
    if coeffs.drift.is_zero() {
        return Ok(y);
    }
    if coeffs.drift.is_constant() {
        return Ok(y - coeffs.drift.value(y) / i);
    }
    let shift = coeffs.drift.value(y).abs() / i;
    solve_monotone(
        |t| (t + coeffs.drift.value(t) / i - y, 1.0 + coeffs.drift.derivative(t) / i),
        y - shift - 1e-3,
        y + shift + 1e-3,
        (y - DEFAULT_WINDOW, y + DEFAULT_WINDOW),
        tol,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferCoefficients {
    pub l: usize,
    pub c: Vec<f64>,
}

/// Coefficients `c_r` with `[phi(tau) tau']^{(l)} = sum_r c_r phi^{(r)}(tau)`,
/// from the derivatives `tau^{(0..=l+1)}`.
pub(crate) fn chain_coefficients(tau: &[f64], l: usize) -> Vec<f64> {
    let xs = &tau[1..];
    let mut c = vec![0.0; l + 1];
    c[0] = tau[l + 1];
    for (r, cr) in c.iter_mut().enumerate().skip(1) {
        *cr = (r..=l).map(|n| binomial(l, n) * tau[l + 1 - n] * partial_bell(n, r, xs)).sum();
    }
    c
}

fn transfer_from_chain(mut c: Vec<f64>, l: usize) -> TransferCoefficients {
    c[l] -= 1.0;
    TransferCoefficients { l, c }
}

/// Stack `tau^{(0..=order)}(y, z)` of the jump inverse.
pub fn tau_stack(coeffs: &CoefficientSet, y: f64, z: f64, order: usize, tol: f64) -> Result<DerivativeStack> {
    let t = solve_tau(coeffs, y, z, tol)?;
    let mut fwd = coeffs.jump.y_derivatives(t, z, order);
    fwd[0] += t;
    if order >= 1 {
        fwd[1] += 1.0;
    }
    inverse_derivatives(&DerivativeStack { point: t, d: fwd }, order)
}

/// Stack `tau_i^{(0..=order)}(y)` of the drift inverse.
pub fn tau_i_stack(coeffs: &CoefficientSet, y: f64, i: usize, order: usize, tol: f64) -> Result<DerivativeStack> {
    check_index(coeffs, i)?;
    tau_i_stack_unchecked(coeffs, y, i as f64, order, tol)
}

pub(crate) fn tau_i_stack_unchecked(
    coeffs: &CoefficientSet,
    y: f64,
    i: f64,
    order: usize,
    tol: f64,
) -> Result<DerivativeStack> {
    let t = solve_tau_i_unchecked(coeffs, y, i, tol)?;
    let mut fwd: Vec<f64> = coeffs.drift.derivatives(t, order).into_iter().map(|v| v / i).collect();
    fwd[0] += t;
    if order >= 1 {
        fwd[1] += 1.0;
    }
    inverse_derivatives(&DerivativeStack { point: t, d: fwd }, order)
}

/// `alpha_{l,r}(y, z)`, `r = 0..=l`.
pub fn transfer_alpha(coeffs: &CoefficientSet, y: f64, z: f64, l: usize, tol: f64) -> Result<TransferCoefficients> {
    let tau = tau_stack(coeffs, y, z, l + 1, tol)?;
    Ok(transfer_from_chain(chain_coefficients(&tau.d, l), l))
}

/// `beta^i_{l,r}(y)`, `r = 0..=l`.
pub fn transfer_beta(coeffs: &CoefficientSet, y: f64, i: usize, l: usize, tol: f64) -> Result<TransferCoefficients> {
    let tau = tau_i_stack(coeffs, y, i, l + 1, tol)?;
    Ok(transfer_from_chain(chain_coefficients(&tau.d, l), l))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferRow {
    pub y: f64,
    pub z: Option<f64>,
    pub l: usize,
    pub coefficients: Vec<f64>,
}

/// Table of `alpha` (for each `z`) and `beta^i` coefficients on a `y` list.
pub fn transfer_table(coeffs: &CoefficientSet, ys: &[f64], zs: &[f64], i: usize, tol: f64) -> Result<Vec<TransferRow>> {
    let mut rows = Vec::new();
    for &y in ys {
        for l in 0..=coeffs.k {
            let b = transfer_beta(coeffs, y, i, l, tol)?;
            rows.push(TransferRow { y, z: None, l, coefficients: b.c });
            for &z in zs {
                let a = transfer_alpha(coeffs, y, z, l, tol)?;
                rows.push(TransferRow { y, z: Some(z), l, coefficients: a.c });
            }
        }
    }
    Ok(rows)
}
