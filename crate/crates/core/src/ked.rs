//! Kinetic-energy densities of a freely moving packet at a point.
//!
//! With ħ = m = 1 and ψ = ψ_f(x, t):
//!
//! ```text
//! τ1 = |ψ'|² / 2                 (p δ(x − x̂) p / 2m)
//! τ2 = −Re(ψ* ψ'') / 2           (symmetrized p²/2m with δ, Rivier)
//! τ3 = (τ1 + τ2) / 2             (Weyl)
//! J  = Im(ψ* ψ')
//! Δ  = τ1 − τ2 = ρ'' / 4
//! ```

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{trapezoid, TimeGrid, TimeSeries};
use crate::wavepacket::{Derivatives, WavePacket};

/// Largest endpoint density, relative to the peak, for a time grid to count
/// as covering the whole passage.
pub const COVERAGE_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityTriple {
    pub tau1: f64,
    pub tau2: f64,
    pub tau3: f64,
    pub flux: f64,
    pub rho: f64,
    pub delta: f64,
}

impl DensityTriple {
    fn from_derivatives(d: &Derivatives) -> Self {
        let tau1 = 0.5 * d.first.norm_sqr();
        let tau2 = -0.5 * (d.value.conj() * d.second).re;
        DensityTriple {
            tau1,
            tau2,
            tau3: 0.5 * (tau1 + tau2),
            flux: (d.value.conj() * d.first).im,
            rho: d.value.norm_sqr(),
            delta: tau1 - tau2,
        }
    }
}

pub fn densities_at(packet: &WavePacket, x: f64, t: f64) -> Result<DensityTriple> {
    Ok(DensityTriple::from_derivatives(&packet.derivatives(x, t)?))
}

/// Δ from the curvature of the probability density, ρ''/4, with
/// ρ'' = 2 Re(ψ* ψ'') + 2 |ψ'|².
pub fn delta_via_curvature(packet: &WavePacket, x: f64, t: f64) -> Result<f64> {
    let d = packet.derivatives(x, t)?;
    let curvature = 2.0 * (d.value.conj() * d.second).re + 2.0 * d.first.norm_sqr();
    Ok(0.25 * curvature)
}

/// Every density quantity sampled on a time grid at a fixed point.
#[derive(Debug, Clone, PartialEq)]
pub struct DensitySeries {
    pub x: f64,
    pub tau1: TimeSeries,
    pub tau2: TimeSeries,
    pub tau3: TimeSeries,
    pub flux: TimeSeries,
    pub rho: TimeSeries,
    pub delta: TimeSeries,
}

pub fn density_series(packet: &WavePacket, x: f64, grid: TimeGrid) -> Result<DensitySeries> {
    let samples: Vec<DensityTriple> = grid
        .points()
        .into_par_iter()
        .map(|t| densities_at(packet, x, t))
        .collect::<Result<_>>()?;
    let column = |f: fn(&DensityTriple) -> f64| TimeSeries {
        grid,
        values: samples.iter().map(f).collect(),
    };
    Ok(DensitySeries {
        x,
        tau1: column(|d| d.tau1),
        tau2: column(|d| d.tau2),
        tau3: column(|d| d.tau3),
        flux: column(|d| d.flux),
        rho: column(|d| d.rho),
        delta: column(|d| d.delta),
    })
}

impl DensitySeries {
    /// Fails unless ρ at both ends of the grid is below
    /// [`COVERAGE_THRESHOLD`] of its peak.
    pub fn check_coverage(&self) -> Result<()> {
        let rho = &self.rho.values;
        let peak = self.rho.peak();
        let edge = rho[0].max(rho[rho.len() - 1]);
        if edge > COVERAGE_THRESHOLD * peak {
            return Err(Error::Coverage { ratio: edge / peak });
        }
        Ok(())
    }
}

/// Time integrals of τ1, J and Δ at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SumRules {
    pub tau1_integral: f64,
    pub flux_integral: f64,
    pub delta_integral: f64,
}

pub fn time_sum_rules(packet: &WavePacket, x: f64, grid: TimeGrid) -> Result<SumRules> {
    let series = density_series(packet, x, grid)?;
    series.check_coverage()?;
    let h = grid.step();
    Ok(SumRules {
        tau1_integral: trapezoid(&series.tau1.values, h),
        flux_integral: trapezoid(&series.flux.values, h),
        delta_integral: trapezoid(&series.delta.values, h),
    })
}
