//! Spectral laboratory for the dipole approximation of laser–atom
//! Schrödinger dynamics.
//!
//! Units are `ħ = e = 1`, `m = 1/2`: the kinetic operator is `−Δ` and the
//! minimal-coupling generator is `(−i∇ − b)² + V` with the coupling
//! `b(r, t) = (1/ω)·a(r/λ, ωt)`.

pub mod bounds;
pub mod cook;
pub mod error;
pub mod fields;
pub mod gauge;
pub mod hamiltonians;
pub mod probes;
pub mod propagate;
pub mod quadrature;
pub mod spatial;

pub use error::{Error, Result};
pub use num_complex::Complex64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
