//! Simulation toolkit for quarton-coupled qubit readout.
//!
//! Energies are in GHz with h = 1 unless a name says otherwise. Dynamics run in
//! angular units (rad/ns) so that a frequency `f` in GHz enters as `TWO_PI * f`.
//! Two-mode tensor products use the ordering `a ⊗ b`, i.e. basis index
//! `n_a * N_b + n_b`, everywhere in the crate.

pub mod basis;
pub mod circuit;
pub mod config;
pub mod decoherence;
pub mod dissipation;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod ops;
pub mod pipeline;
pub mod qnd;
pub mod spectrum;
pub mod sweep;
pub mod units;

pub use error::{Error, Result};

/// Crate version, embedded into every output file.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
