//! Driven two-mode Jaynes–Cummings cavity with Kerr nonlinearity: steady-state
//! photon statistics, the weak-drive amplitude solution, dressed-state spectra
//! and parameter sweeps.

pub mod analytic;
pub mod checks;
pub mod dynamics;
pub mod error;
pub mod hilbert;
pub mod linalg;
pub mod model;
pub mod spectra;
pub mod sweep;

pub use error::{Error, Result};
