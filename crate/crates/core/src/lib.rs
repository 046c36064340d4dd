//! Binaural auralization of spatially sampled sound fields.
//!
//! Sound fields sampled at the nodes of a grid (pressure, plus the normal
//! pressure gradient on surface grids) are turned into ear signals either
//! through a spherical-harmonic decomposition followed by binaural decoding
//! or through a direct least-squares MIMO filter. Both routes are designed
//! per frequency bin and realised as FIR banks.

pub mod dsp;
pub mod error;
pub mod fields;
pub mod geometry;
pub mod grids;
pub mod groundtruth;
pub mod hrtf;
pub mod linalg;
pub mod math;
pub mod renderers;
pub mod sht;
pub mod engine;
pub mod verify;

pub use error::{Error, Result};

/// Speed of sound in m/s.
pub const SPEED_OF_SOUND: f64 = 343.0;
/// Density of air in kg/m^3.
pub const AIR_DENSITY: f64 = 1.204;
