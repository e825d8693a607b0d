//! Quantum-trajectory simulator for a cascaded single-photon source driving a
//! coupled-quantum-dot / superconducting-cavity transducer.
//!
//! Frequencies enter as `nu = omega / 2 pi` in MHz and are converted to
//! angular units (rad/ns) internally; times are in ns.

pub mod analytic;
pub mod engine;
pub mod error;
pub mod hilbert;
pub mod models;
pub mod transfer;
pub mod units;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64;
