//! Kinetic-energy densities of free wave packets and their operational
//! measurement by photon absorption in an imaginary potential barrier.
//!
//! All numerical modules work in solver units (ħ = m = 1); [`units`] maps
//! laboratory quantities in and out.

pub mod absorber;
pub mod arrival;
pub mod detection;
pub mod error;
pub mod grid;
pub mod ked;
pub mod oracle;
mod quadform;
pub mod units;
pub mod wavepacket;

pub use error::{Error, Result};
pub use grid::{trapezoid_integral, TimeGrid, TimeSeries, WavenumberGrid};
pub use units::{Dimension, UnitSystem};
pub use wavepacket::{build_superposition, first_moment_k, GaussianSpec, WavePacket};
