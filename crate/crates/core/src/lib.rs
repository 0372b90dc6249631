//! Numerical laboratory for fractional Schrödinger propagators sampled
//! along tangential curves against fractal measures.

pub mod cli;
pub mod curves;
pub mod dispersion;
pub mod error;
pub mod kernel;
pub mod maximal;
pub mod measures;
pub mod sharpness;
pub mod spectral;
pub mod suites;

pub use error::{LabError, Result};
