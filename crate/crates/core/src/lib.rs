//! Pseudo-spectral simulator and diagnostics for stochastic convective
//! Brinkman-Forchheimer flow on periodic boxes.

pub mod analysis;
pub mod error;
pub mod harness;
pub mod noise;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
