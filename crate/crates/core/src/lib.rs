//! Numerical toolkit for one-dimensional jump SDEs with state-dependent
//! jump rate
//!
//! ```text
//! X_t = x + int_0^t b(X_s) ds
//!         + int int int h(X_{s-}, z) 1{u <= gamma(X_{s-})} N(ds, du, dz)
//! ```
//!
//! covering path simulation by thinning, Fokker–Planck evolution of a
//! density together with its derivatives, the regularizing kernel family
//! and characteristic-function smoothness diagnostics.

// NaN must fail every guard, so guards are written as `!(x > y)`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod diagnostics;
pub mod error;
pub mod fokker_planck;
pub mod functions;
pub mod grid;
pub mod jet;
pub mod kernels;
pub mod model;
pub mod presets;
pub mod quadrature;
pub mod rng;
pub mod roots;
pub mod simulator;

pub use error::{Error, Result};
