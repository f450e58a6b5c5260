//! Closed-form Laplace eigenfunctions on model manifolds (circle, flat tori,
//! round 2-sphere), extraction of their level sets, and numerical checks of
//! the integral identities that tie the volume integral of `|φ|` to the
//! gradient-weighted measure of the nodal set.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: manifolds, charts, volume quadrature, kink-aware line quadrature.
//! - [`spectra`]: eigenmodes with exact eigenvalues and gradients, test functions.
//! - [`levelset`]: marching points/squares/cubes extraction with Newton projection.
//! - [`identities`]: both sides of every identity, residuals, convergence studies.
//! - [`asymptotics`]: norm scans over eigenvalue sequences and exponent fits.
//! - [`cli`]: the `nodal-lab` command-line front end.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod cli;
mod error;
pub mod geometry;
pub mod identities;
pub mod levelset;
pub mod roots;
pub mod spectra;

pub use error::{Error, Result};
