//! Numerical study of radial Schrödinger operators `-Δ + V` at the edge of
//! the essential spectrum.
//!
//! The crate is organized around one question: given a potential with an
//! inverse-square tail, does zero energy carry a resonance, a bound state,
//! or nothing? The modules build up to that:
//!
//! * [`iterlog`]: iterated logarithms and the families of comparison
//!   functions and comparison potentials whose tails separate the three
//!   answers.
//! * [`potentials`]: concrete radial potentials (an exactly solvable
//!   two-parameter family, wells, bumps, sampled data) plus tail analysis
//!   and adaptive quadrature.
//! * [`radialgrid`]: reduction to a half-line operator and its symmetric
//!   tridiagonal finite-difference form.
//! * [`eigensolve`]: certified eigenvalue counts, bisection for the lowest
//!   eigenvalues, inverse iteration for eigenvectors.
//! * [`threshold`]: the drivers, from pointwise tail criteria through
//!   critical coupling search, criticality sweeps, zero-mode classification,
//!   and weighted comparison checks to a quadratic-form identity check.

// Validation guards are written `!(x > bound)` so that NaN fails them;
// the un-negated comparison would wave NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eigensolve;
mod error;
pub mod iterlog;
pub mod potentials;
pub mod quadrature;
pub mod radialgrid;
pub mod threshold;

pub use error::{BrinkError, ErrorClass};

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, BrinkError>;
