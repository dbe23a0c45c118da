//! Uniform grids, trapezoidal sums and Lagrange interpolation stencils.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl UniformGrid {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self> {
        let g = UniformGrid { lo, hi, points };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite() && self.hi > self.lo) || self.points < 2 {
            return Err(Error::Config(format!(
                "grid [{}, {}] with {} points is not a valid uniform grid",
                self.lo, self.hi, self.points
            )));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    pub fn node(&self, j: usize) -> f64 {
        if j + 1 == self.points {
            self.hi
        } else {
            self.lo + j as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.points).map(|j| self.node(j)).collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }

    /// Trapezoidal integral of nodal values.
    pub fn trapezoid(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.points);
        let inner: f64 = values[1..values.len() - 1].iter().sum();
        self.spacing() * (inner + 0.5 * (values[0] + values[values.len() - 1]))
    }

    pub fn trapezoid_abs(&self, values: &[f64]) -> f64 {
        let inner: f64 = values[1..values.len() - 1].iter().map(|v| v.abs()).sum();
        self.spacing() * (inner + 0.5 * (values[0].abs() + values[values.len() - 1].abs()))
    }

    /// Lagrange stencil of the given odd degree for reading nodal data at `x`.
    ///
    /// Nodes outside the grid carry weight but read as zero, which realizes
    /// the zero-extension boundary policy.
    pub fn stencil(&self, x: f64, degree: usize) -> Stencil {
        let h = self.spacing();
        let s = (x - self.lo) / h;
        let cell = s.floor();
        let npts = degree + 1;
        let first = cell as i64 - (npts as i64 / 2 - 1);
        let mut weights = [0.0; MAX_STENCIL];
        for (m, w) in weights.iter_mut().enumerate().take(npts) {
            let xm = (first + m as i64) as f64;
            let mut prod = 1.0;
            for k in 0..npts {
                if k != m {
                    let xk = (first + k as i64) as f64;
                    prod *= (s - xk) / (xm - xk);
                }
            }
            *w = prod;
        }
        Stencil { first, len: npts, weights }
    }
}

pub const MAX_STENCIL: usize = 8;

#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    pub first: i64,
    pub len: usize,
    pub weights: [f64; MAX_STENCIL],
}

impl Stencil {
    /// Interpolated value, reading zero outside `0..values.len()`.
    #[inline]
    pub fn apply(&self, values: &[f64]) -> f64 {
        let n = values.len() as i64;
        let mut acc = 0.0;
        if self.first >= 0 && self.first + self.len as i64 <= n {
            let base = self.first as usize;
            for m in 0..self.len {
                acc += self.weights[m] * values[base + m];
            }
        } else {
            for m in 0..self.len {
                let j = self.first + m as i64;
                if j >= 0 && j < n {
                    acc += self.weights[m] * values[j as usize];
                }
            }
        }
        acc
    }

    /// True when every stencil node lies outside `0..n`.
    pub fn is_outside(&self, n: usize) -> bool {
        self.first + self.len as i64 <= 0 || self.first >= n as i64
    }
}

/// Central finite differences of nodal data (one-sided at the ends).
pub fn finite_difference(grid: &UniformGrid, values: &[f64]) -> Vec<f64> {
    let h = grid.spacing();
    let n = values.len();
    (0..n)
        .map(|j| {
            if j == 0 {
                (values[1] - values[0]) / h
            } else if j == n - 1 {
                (values[n - 1] - values[n - 2]) / h
            } else {
                (values[j + 1] - values[j - 1]) / (2.0 * h)
            }
        })
        .collect()
}
