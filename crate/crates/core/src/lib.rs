//! Floquet-Bloch analysis of spring-mass chains under periodic progressive
//! modulation.
//!
//! The crate is organised bottom-up:
//!
//! - [`spectral`]: dense eigendecomposition, determinants and symplectic checks.
//! - [`integrators`]: fixed-step Gauss-Legendre, symplectic Euler and RK4 schemes.
//! - [`mathieu`]: the single modulated oscillator and its stability chart.
//! - [`chain`]: modulated chain parameters, matrix-free right-hand sides, shifts.
//! - [`monodromy`]: fundamental, monodromy and reduced monodromy matrices.
//! - [`dispersion`]: non-ambiguous Floquet-Bloch dispersion diagrams.
//! - [`continuum`]: closed-form continuum limit, fictitious medium and Willis terms.
//! - [`simulate`]: time-domain wave fields and directionality diagnostics.

pub mod chain;
pub mod continuum;
pub mod dispersion;
mod error;
pub mod integrators;
pub mod mathieu;
pub mod monodromy;
pub mod simulate;
pub mod spectral;

pub use error::{Error, Result};
pub use num_complex::Complex64;
