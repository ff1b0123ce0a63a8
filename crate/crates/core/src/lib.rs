//! Structure-preserving exponential integrators for Allen–Cahn and
//! Cahn–Hilliard gradient flows on periodic grids.

pub mod correctors;
pub mod error;
pub mod etdrk;
pub mod harness;
pub mod models;
pub mod par;
pub mod spectral;

pub use error::{Error, Result};
