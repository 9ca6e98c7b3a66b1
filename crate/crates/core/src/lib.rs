//! Pseudo-spectral solver and Littlewood-Paley diagnostics for the
//! Kuramoto-Sivashinsky family on periodic boxes.
//!
//! The crate is organised bottom-up:
//!
//! - [`spectral`]: transforms, band projections, fractional derivatives, norms.
//! - [`models`]: linear symbols and dealiased nonlinear terms of the four equations.
//! - [`integrator`]: ETDRK4 and IMEX Crank-Nicolson time stepping.
//! - [`diagnostics`]: dyadic tail energies, Gevrey fits, blow-up bookkeeping.
//! - [`experiments`]: configs, initial data, checkpoints, CSV/JSON output, sweeps.
//! - [`verify`]: named verification suites used by the CLI and the acceptance tests.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod integrator;
pub mod models;
pub mod par;
pub mod spectral;
#[cfg(test)]
mod testing;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;
