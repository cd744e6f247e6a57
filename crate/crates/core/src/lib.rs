//! Time-resolved physical spectrum of luminescence from an initially excited
//! two-level emitter coupled to a single cavity mode, including Fano
//! interference between the two emission channels.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] builds the master-equation generator on a truncated product
//!   basis and propagates the density matrix.
//! * [`correlations`] holds the closed-form regression coefficients and the
//!   causal two-time correlation traces built from them.
//! * [`spectrum`] assembles the spectrometer-filtered spectrum S(ν, t, Γs),
//!   its reductions, the emitter-only closed form, peak analysis and the
//!   one-sided Fourier doublet probe.
//!
//! Energies and rates are in µeV. Times are µeV⁻¹ internally (ħ = 1) and
//! picoseconds at the file boundary, see [`units`].

pub mod correlations;
pub mod error;
pub mod export;
pub mod grid;
pub mod model;
pub mod quad;
pub mod spectrum;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
