//! Stark tuning of donor electron spins in germanium.
//!
//! The crate forward-models the electric-field-induced shift of a donor's
//! spin resonance frequency (spin-orbit and hyperfine contributions),
//! simulates the phase-accumulation pulsed-ESR experiment used to measure
//! that shift, and extracts Stark parameters from shift-vs-field datasets
//! by global weighted least squares.
//!
//! Module map:
//! - [`geometry`] — Miller directions and the four ⟨111⟩ valley axes.
//! - [`gtensor`] — per-valley g-tensors, the weighted effective tensor, and
//!   a phenomenological valley-repopulation model.
//! - [`stark`] — the quadratic shift model, strain terms, and bipolar-pulse
//!   cancellation.
//! - [`registry`] — measured, theoretical, and inferred Stark parameters
//!   keyed by donor and field orientation.
//! - [`experiment`] — pulse sequences, sample fixtures, and synthetic
//!   echo-phase dataset generation.
//! - [`dataset`] — the CSV + JSON-sidecar interchange format for datasets.
//! - [`fit`] — global least-squares extraction of (eta_g, eta_A).
//! - [`tunability`] — maximum detuning vs. ensemble linewidth reports.

pub mod constants;
pub mod dataset;
pub mod donor;
mod error;
pub mod experiment;
pub mod fit;
pub mod geometry;
pub mod gtensor;
pub mod registry;
pub mod stark;
pub mod tunability;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
