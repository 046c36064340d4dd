//! Special functions and spherical-harmonic machinery.

pub mod bessel;
pub mod rotation;
pub mod sh;
