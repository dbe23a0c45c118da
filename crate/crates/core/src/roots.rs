//! Safeguarded root finding for monotone scalar maps.

use crate::error::{Error, Result};

/// Solves `g(x) = 0` for a monotone `g`, given as `x -> (g(x), g'(x))`.
///
/// The bracket `[lo, hi]` is expanded geometrically (never past `window`)
/// until it straddles the root, bisected to a coarse width and then
/// polished by Newton steps that fall back to bisection whenever they leave
/// the bracket. Returns once `|g(x)| <= tol` or the bracket collapses.
pub fn solve_monotone<G>(g: G, lo: f64, hi: f64, window: (f64, f64), tol: f64) -> Result<f64>
where
    G: Fn(f64) -> (f64, f64),
{
    let (mut lo, mut hi) = (lo.min(hi), lo.max(hi));
    let mut glo = g(lo).0;
    let mut ghi = g(hi).0;
    if !glo.is_finite() || !ghi.is_finite() {
        return Err(Error::DomainEscape(format!("non-finite residual on bracket [{lo}, {hi}]")));
    }
    if glo == 0.0 {
        return Ok(lo);
    }
    if ghi == 0.0 {
        return Ok(hi);
    }
    // Direction of monotonicity: increasing iff g(hi) > g(lo) once bracketed.
    let increasing = if glo.signum() != ghi.signum() { ghi > glo } else { ghi >= glo };
    let mut width = (hi - lo).max(1e-3);
    let mut guard = 0;
    while glo.signum() == ghi.signum() {
        guard += 1;
        // root lies beyond the end whose residual has the smaller magnitude
        let go_up = (glo < 0.0) == increasing;
        if go_up {
            lo = hi;
            glo = ghi;
            hi = (hi + width).min(window.1);
            ghi = g(hi).0;
            if hi >= window.1 && ghi.signum() == glo.signum() {
                return Err(Error::DomainEscape(format!("no sign change up to {}", window.1)));
            }
        } else {
            hi = lo;
            ghi = glo;
            lo = (lo - width).max(window.0);
            glo = g(lo).0;
            if lo <= window.0 && glo.signum() == ghi.signum() {
                return Err(Error::DomainEscape(format!("no sign change down to {}", window.0)));
            }
        }
        if !glo.is_finite() || !ghi.is_finite() || guard > 200 {
            return Err(Error::DomainEscape("bracket expansion failed".into()));
        }
        width *= 2.0;
    }

    let coarse = 1e-6 * (1.0 + lo.abs().max(hi.abs()));
    while hi - lo > coarse {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid).0;
        if gm == 0.0 {
            return Ok(mid);
        }
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }

    let mut x = 0.5 * (lo + hi);
    for _ in 0..100 {
        let (gx, dg) = g(x);
        if gx.abs() <= tol {
            return Ok(x);
        }
        if gx.signum() == glo.signum() {
            lo = x;
            glo = gx;
        } else {
            hi = x;
        }
        let newton = if dg != 0.0 { x - gx / dg } else { f64::NAN };
        let next = if newton.is_finite() && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if next == x || hi - lo <= 4.0 * f64::EPSILON * (1.0 + x.abs()) {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}
