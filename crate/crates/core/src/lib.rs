//! Spectral laboratory for the perturbed Lamé operator `-Δ* + V` on a periodic box.
//!
//! The modules build on each other bottom-up: [`grid`] provides fields and
//! Fourier calculus, [`helmholtz`] the exact solenoidal/gradient split,
//! [`lame`] the operator and its quadratic form, [`inequalities`] and
//! [`multiplier`] numerical checks of the constants and integral identities,
//! and [`spectral`] / [`resolvent`] the eigenvalue and resolvent experiments.

// `!(x <= bound)` is deliberate throughout: a NaN must fail the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod error;
mod fft;
pub mod grid;
pub mod helmholtz;
pub mod inequalities;
pub mod krylov;
pub mod lame;
pub mod multiplier;
pub mod resolvent;
pub mod spectral;

pub use error::{Error, Result};
pub use grid::{Grid, ScalarField, VectorField};
pub use lame::{LameParams, Potential, PotentialSpec};
pub use num_complex::Complex64;

/// Version of this crate, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
