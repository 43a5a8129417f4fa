//! First-photon detection rate for a fixed atomic decay rate γ and its
//! deconvolution back to the ideal absorption rate.
//!
//! The finite-γ rate (Ω → ∞) is the double k-integral
//!
//! ```text
//! Π_N(t) = (2π k₀)⁻¹ ∫∫ ψ̃*(k) ψ̃(k′) e^{i(k² − k′²)t/2} γ k k′ / (γ + i(k² − k′²))
//! ```
//!
//! and the detector response W(t) of an atom at rest enters through
//!
//! ```text
//! 1/W̃(ν) = 1 + (γ/Ω² + 2/γ) iν + (3/Ω²)(iν)² + (2/(γΩ²))(iν)³
//! ```
//!
//! which reduces to `1 + 2iν/γ` as Ω → ∞.

use std::f64::consts::PI;
use std::str::FromStr;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{invalid, Error, Result};
use crate::grid::{TimeGrid, TimeSeries};
use crate::quadform::HermitianForm;
use crate::wavepacket::WavePacket;

/// Largest endpoint value, relative to the peak, accepted before the
/// periodic transform.
pub const WRAP_THRESHOLD: f64 = 1e-6;

/// Zero padding applied before the transform.
pub const PADDING_FACTOR: usize = 4;

/// Largest imaginary residue, relative to the peak, silently discarded after
/// the inverse transform.
pub const IMAGINARY_RESIDUE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserSpec {
    /// Rabi frequency; `None` is the Ω → ∞ limit.
    pub rabi: Option<f64>,
    pub gamma: f64,
}

impl LaserSpec {
    pub fn new(gamma: f64, rabi: Option<f64>) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(invalid("gamma", format!("decay rate must be > 0, got {gamma}")));
        }
        if let Some(omega) = rabi {
            if !(omega.is_finite() && omega > 0.0) {
                return Err(invalid("rabi", format!("Rabi frequency must be > 0, got {omega}")));
            }
        }
        Ok(LaserSpec { rabi, gamma })
    }

    /// Ω → ∞ at fixed γ.
    pub fn strong(gamma: f64) -> Result<Self> {
        Self::new(gamma, None)
    }

    /// Imaginary barrier height Ω²/2γ of the low-saturation reduction.
    pub fn barrier_height(&self) -> Option<f64> {
        self.rabi.map(|omega| omega * omega / (2.0 * self.gamma))
    }

    /// True when γ exceeds `factor` times the packet's mean kinetic energy.
    pub fn low_saturation(&self, packet: &WavePacket, factor: f64) -> bool {
        self.gamma > factor * 0.5 * packet.mean_k2()
    }

    /// 1/W̃(ν).
    pub fn inverse_response(&self, nu: f64) -> Complex64 {
        let s = Complex64::new(0.0, nu);
        let g = self.gamma;
        match self.rabi {
            None => 1.0 + s * (2.0 / g),
            Some(omega) => {
                let o2 = omega * omega;
                1.0 + s * (g / o2 + 2.0 / g) + s * s * (3.0 / o2) + s * s * s * (2.0 / (g * o2))
            }
        }
    }
}

/// `γ k k′ / (γ + i(k² − k′²))`.
pub fn finite_gamma_kernel(k: f64, k_prime: f64, gamma: f64) -> Complex64 {
    gamma * k * k_prime / Complex64::new(gamma, k * k - k_prime * k_prime)
}

/// Finite-γ first-photon rate with its analytic normalization.
pub fn finite_gamma_rate(packet: &WavePacket, laser: &LaserSpec, tgrid: &TimeGrid) -> Result<TimeSeries> {
    let ks = packet.wavenumbers();
    let prefactor = 1.0 / (2.0 * PI * packet.p0());
    let gamma = laser.gamma;
    let form = HermitianForm::from_upper(ks.len(), |j, l| {
        finite_gamma_kernel(ks[j], ks[l], gamma) * prefactor
    });
    let coeffs: Vec<Complex64> = packet
        .amplitude()
        .iter()
        .zip(packet.grid().weights())
        .map(|(a, w)| a * w)
        .collect();
    let k2: Vec<f64> = ks.iter().map(|k| k * k).collect();
    TimeSeries::new(*tgrid, form.evaluate(&coeffs, &k2, &tgrid.points()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeconvolutionMode {
    Fourier,
    TimeDomain,
}

impl FromStr for DeconvolutionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fourier" => Ok(DeconvolutionMode::Fourier),
            "timedomain" => Ok(DeconvolutionMode::TimeDomain),
            other => Err(invalid("mode", format!("expected fourier or timedomain, got {other}"))),
        }
    }
}

fn check_endpoints(rate: &TimeSeries) -> Result<()> {
    let peak = rate.peak();
    let v = &rate.values;
    let edge = v[0].abs().max(v[v.len() - 1].abs());
    if !(peak > 0.0) || edge > WRAP_THRESHOLD * peak {
        return Err(Error::WrapAround {
            ratio: if peak > 0.0 { edge / peak } else { f64::INFINITY },
        });
    }
    Ok(())
}

/// Removes the detector response W from a measured rate.
pub fn deconvolve(rate: &TimeSeries, laser: &LaserSpec, mode: DeconvolutionMode) -> Result<TimeSeries> {
    check_endpoints(rate)?;
    match mode {
        DeconvolutionMode::Fourier => deconvolve_fourier(rate, laser),
        DeconvolutionMode::TimeDomain => {
            if laser.rabi.is_some() {
                return Err(Error::UnsupportedMode(
                    "timedomain deconvolution needs the Ω → ∞ limit".into(),
                ));
            }
            let dh = derivative(&rate.values, rate.grid.step());
            let c = 2.0 / laser.gamma;
            let values = rate.values.iter().zip(&dh).map(|(v, d)| v + c * d).collect();
            TimeSeries::new(rate.grid, values)
        }
    }
}

fn deconvolve_fourier(rate: &TimeSeries, laser: &LaserSpec) -> Result<TimeSeries> {
    let n = rate.len();
    let padded = PADDING_FACTOR * n;
    let dt = rate.grid.step();
    let mut buf: Vec<Complex64> = rate.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    buf.resize(padded, Complex64::default());
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(padded).process(&mut buf);
    let dnu = 2.0 * PI / (padded as f64 * dt);
    for (m, z) in buf.iter_mut().enumerate() {
        let signed = if m <= padded / 2 { m as f64 } else { m as f64 - padded as f64 };
        let mut factor = laser.inverse_response(signed * dnu);
        if 2 * m == padded {
            // the Nyquist bin has no odd part for a real signal
            factor = Complex64::new(factor.re, 0.0);
        }
        *z *= factor;
    }
    planner.plan_fft_inverse(padded).process(&mut buf);
    let scale = 1.0 / padded as f64;
    let out: Vec<Complex64> = buf[..n].iter().map(|z| z * scale).collect();
    let peak = out.iter().fold(0.0, |m: f64, z| m.max(z.re.abs()));
    if let Some(z) = out.iter().find(|z| z.im.abs() > IMAGINARY_RESIDUE * peak) {
        return Err(Error::Resolution(format!(
            "deconvolved series keeps an imaginary residue {:e} (peak {peak:e})",
            z.im
        )));
    }
    TimeSeries::new(rate.grid, out.iter().map(|z| z.re).collect())
}

/// Fourth-order finite-difference first derivative, one-sided at the ends.
fn derivative(v: &[f64], h: f64) -> Vec<f64> {
    let n = v.len();
    if n < 5 {
        // too short for the five-point stencils; fall back to second order
        return (0..n)
            .map(|i| match i {
                0 => (v[1] - v[0]) / h,
                i if i == n - 1 => (v[n - 1] - v[n - 2]) / h,
                i => (v[i + 1] - v[i - 1]) / (2.0 * h),
            })
            .collect();
    }
    let forward = |s: &dyn Fn(usize) -> f64| (-25.0 * s(0) + 48.0 * s(1) - 36.0 * s(2) + 16.0 * s(3) - 3.0 * s(4)) / (12.0 * h);
    let mut d = vec![0.0; n];
    d[0] = forward(&|j| v[j]);
    d[1] = (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) / (12.0 * h);
    for i in 2..n - 2 {
        d[i] = (v[i - 2] - 8.0 * v[i - 1] + 8.0 * v[i + 1] - v[i + 2]) / (12.0 * h);
    }
    d[n - 2] = (3.0 * v[n - 1] + 10.0 * v[n - 2] - 18.0 * v[n - 3] + 6.0 * v[n - 4] - v[n - 5]) / (12.0 * h);
    d[n - 1] = -forward(&|j| v[n - 1 - j]);
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::trapezoid_integral;
    use approx::assert_relative_eq;

    fn pulse_grid() -> TimeGrid {
        TimeGrid::new(-10.0, 10.0, 2001).unwrap()
    }

    #[test]
    fn derivative_is_fourth_order() {
        let err = |n: usize| {
            let g = TimeGrid::new(0.0, 1.0, n).unwrap();
            let v: Vec<f64> = g.points().iter().map(|t| (3.0 * t).sin()).collect();
            let d = derivative(&v, g.step());
            g.points()
                .iter()
                .zip(&d)
                .fold(0.0, |m: f64, (t, d)| m.max((d - 3.0 * (3.0 * t).cos()).abs()))
        };
        let ratio = err(101) / err(201);
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn infinite_gamma_is_identity() {
        let g = pulse_grid();
        let r = TimeSeries::from_fn(g, |t| (-t * t).exp());
        let laser = LaserSpec::strong(1e12).unwrap();
        let out = deconvolve(&r, &laser, DeconvolutionMode::Fourier).unwrap();
        assert!(out.sup_distance(&r, &r) < 1e-8);
    }

    #[test]
    fn recovers_exponential_convolution() {
        // Π = Π_id * W with W(t) = (γ/2) e^{−γt/2} θ(t), by fine quadrature
        let gamma = 6.0;
        let g = pulse_grid();
        let ideal = |t: f64| (-(t * t) / 2.0).exp();
        let measured = TimeSeries::from_fn(g, |t| {
            let n = 20000;
            let h = 40.0 / gamma / n as f64;
            (0..=n)
                .map(|i| {
                    let s = i as f64 * h;
                    let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                    w * h * 0.5 * gamma * (-0.5 * gamma * s).exp() * ideal(t - s)
                })
                .sum()
        });
        let laser = LaserSpec::strong(gamma).unwrap();
        let exact = TimeSeries::from_fn(g, ideal);
        for mode in [DeconvolutionMode::Fourier, DeconvolutionMode::TimeDomain] {
            let out = deconvolve(&measured, &laser, mode).unwrap();
            assert!(out.sup_distance(&exact, &exact) < 1e-4, "{mode:?}");
        }
    }

    #[test]
    fn unit_integral_and_linearity() {
        let g = pulse_grid();
        let a = TimeSeries::from_fn(g, |t| (-(t - 1.0).powi(2)).exp());
        let b = TimeSeries::from_fn(g, |t| (-(t + 2.0).powi(2) / 3.0).exp() * (1.0 + 0.3 * t.sin()));
        let laser = LaserSpec::strong(2.5).unwrap();
        let da = deconvolve(&a, &laser, DeconvolutionMode::Fourier).unwrap();
        let db = deconvolve(&b, &laser, DeconvolutionMode::Fourier).unwrap();
        let combo = TimeSeries::from_fn(g, |t| {
            2.0 * (-(t - 1.0).powi(2)).exp() - 0.5 * (-(t + 2.0).powi(2) / 3.0).exp() * (1.0 + 0.3 * t.sin())
        });
        let dc = deconvolve(&combo, &laser, DeconvolutionMode::Fourier).unwrap();
        for i in 0..g.len() {
            assert!((dc.values[i] - (2.0 * da.values[i] - 0.5 * db.values[i])).abs() < 1e-12);
        }
        let before = trapezoid_integral(&a).unwrap();
        assert!((trapezoid_integral(&da).unwrap() - before).abs() < 1e-6 * before);
    }

    #[test]
    fn finite_rabi_needs_fourier() {
        let g = pulse_grid();
        let r = TimeSeries::from_fn(g, |t| (-t * t).exp());
        let laser = LaserSpec::new(2.0, Some(5.0)).unwrap();
        assert!(matches!(
            deconvolve(&r, &laser, DeconvolutionMode::TimeDomain),
            Err(Error::UnsupportedMode(_))
        ));
        assert!(deconvolve(&r, &laser, DeconvolutionMode::Fourier).is_ok());
        assert_relative_eq!(laser.barrier_height().unwrap(), 6.25);
    }

    #[test]
    fn truncated_series_rejected() {
        let g = TimeGrid::new(0.0, 2.0, 201).unwrap();
        let r = TimeSeries::from_fn(g, |t| (-t * t).exp());
        let laser = LaserSpec::strong(2.0).unwrap();
        assert!(matches!(
            deconvolve(&r, &laser, DeconvolutionMode::Fourier),
            Err(Error::WrapAround { .. })
        ));
    }

    #[test]
    fn kernel_is_hermitian() {
        for (k, kp) in [(1.0, 2.0), (3.5, 0.2), (7.0, 7.0)] {
            let a = finite_gamma_kernel(k, kp, 4.0);
            let b = finite_gamma_kernel(kp, k, 4.0);
            assert!((a - b.conj()).norm() < 1e-15);
        }
        assert!(LaserSpec::new(0.0, None).is_err());
        assert!(LaserSpec::new(1.0, Some(-1.0)).is_err());
    }
}
