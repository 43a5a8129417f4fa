//! Kijowski's arrival-time distribution
//!
//! ```text
//! Π_K(t) = |(2π)^{-1/2} ∫ dk √k ψ̃(k) e^{ikx − ik²t/2}|²
//! ```
//!
//! and the first terms of its expansion in (k − k₀): the density times the
//! mean velocity, the flux, and the flux corrected by Δ/(2p₀).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{TimeGrid, TimeSeries};
use crate::ked::{density_series, COVERAGE_THRESHOLD};
use crate::wavepacket::WavePacket;

pub fn kijowski_distribution(packet: &WavePacket, x: f64, tgrid: &TimeGrid) -> Result<TimeSeries> {
    let values = tgrid
        .points()
        .into_par_iter()
        .map(|t| {
            packet.check_window(x, t)?;
            Ok(packet.weighted_value(x, t, f64::sqrt).norm_sqr())
        })
        .collect::<Result<Vec<f64>>>()?;
    let series = TimeSeries::new(*tgrid, values)?;
    let edge = series.values[0].max(series.values[series.len() - 1]);
    if edge > COVERAGE_THRESHOLD * series.peak() {
        return Err(Error::Coverage {
            ratio: edge / series.peak(),
        });
    }
    Ok(series)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionReport {
    pub kijowski: TimeSeries,
    /// v₀ ρ
    pub order0: TimeSeries,
    /// J
    pub order1: TimeSeries,
    /// J + Δ/(2p₀)
    pub order2: TimeSeries,
    /// Sup-norm distances of the three orders from `kijowski`, relative to
    /// its peak.
    pub sup_distances: [f64; 3],
}

pub fn expansion_report(packet: &WavePacket, x: f64, tgrid: &TimeGrid) -> Result<ExpansionReport> {
    let kijowski = kijowski_distribution(packet, x, tgrid)?;
    let d = density_series(packet, x, *tgrid)?;
    let order0 = d.rho.scaled(packet.v0());
    let order1 = d.flux.clone();
    let half_inv_p0 = 0.5 / packet.p0();
    let order2 = TimeSeries {
        grid: *tgrid,
        values: d
            .flux
            .values
            .iter()
            .zip(&d.delta.values)
            .map(|(j, delta)| j + delta * half_inv_p0)
            .collect(),
    };
    let sup_distances = [
        order0.sup_distance(&kijowski, &kijowski),
        order1.sup_distance(&kijowski, &kijowski),
        order2.sup_distance(&kijowski, &kijowski),
    ];
    Ok(ExpansionReport {
        kijowski,
        order0,
        order1,
        order2,
        sup_distances,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::trapezoid_integral;
    use crate::units::{Dimension, UnitSystem, CAESIUM_MASS, HBAR_LAB};
    use crate::wavepacket::{build_superposition, default_grid, GaussianSpec};
    use approx::assert_relative_eq;

    fn gaussian(spread_ratio: f64, k0: f64, n: usize) -> WavePacket {
        let u = UnitSystem::with_length_unit(HBAR_LAB, CAESIUM_MASS, 1.0).unwrap();
        let dx = 0.5 / (spread_ratio * k0);
        let spec = GaussianSpec::new(dx, u.to_user(k0, Dimension::Velocity)).focused_at(0.0, 0.0);
        build_superposition(&[spec], default_grid(&[spec], &u, n).unwrap(), u).unwrap()
    }

    /// Time grid covering the passage of a packet centered at x = 0 at t = 0.
    fn passage(p: &WavePacket, half_widths: f64, n: usize) -> TimeGrid {
        let (_, sd) = p.position_spread(0.0);
        let span = half_widths * sd / p.v0();
        TimeGrid::new(-span, span, n).unwrap()
    }

    #[test]
    fn normalized_and_positive() {
        let p = gaussian(0.05, 10.0, 512);
        let g = passage(&p, 12.0, 4001);
        let pk = kijowski_distribution(&p, 0.0, &g).unwrap();
        assert!(pk.values.iter().all(|&v| v >= 0.0));
        assert_relative_eq!(trapezoid_integral(&pk).unwrap(), 1.0, max_relative = 1e-4);
    }

    #[test]
    fn narrow_packet_is_density_times_velocity() {
        let p = gaussian(1e-3, 10.0, 512);
        let g = passage(&p, 12.0, 2001);
        let r = expansion_report(&p, 0.0, &g).unwrap();
        assert!(r.sup_distances[0] < 1e-4, "{:?}", r.sup_distances);
    }

    #[test]
    fn orders_improve_for_moderate_spread() {
        let p = gaussian(0.05, 10.0, 512);
        let g = passage(&p, 12.0, 2001);
        let [d0, d1, d2] = expansion_report(&p, 0.0, &g).unwrap().sup_distances;
        assert!(d0 > d1 && d1 > d2, "{d0} {d1} {d2}");
    }

    #[test]
    fn second_order_correction_integrates_to_zero() {
        let p = gaussian(0.05, 10.0, 512);
        let g = passage(&p, 12.0, 4001);
        let r = expansion_report(&p, 0.0, &g).unwrap();
        let diff = TimeSeries {
            grid: g,
            values: r.order2.values.iter().zip(&r.order1.values).map(|(a, b)| a - b).collect(),
        };
        assert!(trapezoid_integral(&diff).unwrap().abs() < 1e-6);
        assert_relative_eq!(trapezoid_integral(&r.order1).unwrap(), 1.0, max_relative = 1e-4);
        assert_relative_eq!(trapezoid_integral(&r.order2).unwrap(), 1.0, max_relative = 1e-4);
    }

    #[test]
    fn symmetric_point_flux_equals_velocity_density() {
        let p = gaussian(0.01, 10.0, 512);
        let g = TimeGrid::new(-0.5, 0.5, 3).unwrap();
        let d = density_series(&p, 0.0, g).unwrap();
        // middle sample is the focus, where the envelope is flat
        assert_relative_eq!(d.flux.values[1], p.v0() * d.rho.values[1], max_relative = 1e-6);
    }

    #[test]
    fn translation_covariance() {
        let p = gaussian(0.05, 10.0, 512);
        let g = passage(&p, 12.0, 401);
        let a = 0.7;
        let shifted_grid = TimeGrid::new(g.t_min() + a / p.v0(), g.t_max() + a / p.v0(), 401).unwrap();
        let direct = kijowski_distribution(&p, a, &shifted_grid).unwrap();
        let moved = kijowski_distribution(&p.shifted(-a), 0.0, &shifted_grid).unwrap();
        let d = direct.sup_distance(&moved, &direct);
        assert!(d < 1e-10, "{d}");
    }

    #[test]
    fn truncated_grid_is_coverage_error() {
        let p = gaussian(0.05, 10.0, 512);
        let g = TimeGrid::new(0.0, 1.0, 101).unwrap();
        assert!(matches!(kijowski_distribution(&p, 0.0, &g), Err(Error::Coverage { .. })));
    }
}
