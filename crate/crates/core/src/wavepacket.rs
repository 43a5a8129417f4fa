//! Free one-dimensional wave packets with positive-momentum support.
//!
//! A packet is stored as its momentum amplitude ψ̃(k) at t = 0 on a uniform
//! wavenumber grid (solver units, ħ = m = 1). Position-space values of the
//! freely moving packet
//!
//! ```text
//! ψ_f(x, t) = (2π)^{-1/2} ∫ dk ψ̃(k) exp(i k x − i k² t / 2)
//! ```
//!
//! and its spatial derivatives are evaluated by trapezoid quadrature on the
//! same grid; `∂ⁿ/∂xⁿ` becomes multiplication by `(ik)ⁿ` under the integral.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::WavenumberGrid;
use crate::units::{Dimension, UnitSystem};

/// Minimum distance of a component's mean wavenumber from k = 0, in units of
/// its momentum spread.
pub const POSITIVITY_MARGIN: f64 = 4.0;

/// Minimum number of grid points per momentum spread.
pub const POINTS_PER_SPREAD: f64 = 8.0;

/// Largest tolerated |ψ̃| at a grid endpoint relative to the maximum. A grid
/// that starts at the k → 0 floor (first point one spacing above zero) is
/// exempt at its lower end; there the positivity margin bounds what is cut.
pub const ENDPOINT_LEAKAGE: f64 = 1e-6;

/// Tolerance of the unit-norm check for externally supplied amplitudes.
pub const NORM_TOLERANCE: f64 = 1e-8;

/// Half-width, in position standard deviations, that must stay clear of the
/// nearest periodic image of the trapezoid sum.
const ALIAS_CLEARANCE: f64 = 8.0;

/// One Gaussian component, in user units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianSpec {
    /// Position standard deviation at the focus time, μm.
    pub delta_x: f64,
    /// Mean velocity, cm/s.
    pub mean_velocity: f64,
    /// Center at the focus time, μm.
    #[serde(default)]
    pub focus_position: f64,
    /// Time at which the component is a minimum-uncertainty packet, μs.
    #[serde(default)]
    pub focus_time: f64,
    /// Complex amplitude `[re, im]` applied before global renormalization.
    #[serde(default = "unit_weight", with = "complex_pair")]
    pub weight: Complex64,
}

fn unit_weight() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

mod complex_pair {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        let [re, im] = <[f64; 2]>::deserialize(d)?;
        Ok(Complex64::new(re, im))
    }
}

impl GaussianSpec {
    pub fn new(delta_x: f64, mean_velocity: f64) -> Self {
        GaussianSpec {
            delta_x,
            mean_velocity,
            focus_position: 0.0,
            focus_time: 0.0,
            weight: unit_weight(),
        }
    }

    pub fn focused_at(mut self, position: f64, time: f64) -> Self {
        self.focus_position = position;
        self.focus_time = time;
        self
    }

    pub fn with_weight(mut self, weight: Complex64) -> Self {
        self.weight = weight;
        self
    }

    fn to_solver(self, units: &UnitSystem) -> SolverGaussian {
        let dx = units.to_solver(self.delta_x, Dimension::Length);
        SolverGaussian {
            sigma_k: 0.5 / dx,
            k_center: units.to_solver(self.mean_velocity, Dimension::Velocity),
            x_focus: units.to_solver(self.focus_position, Dimension::Length),
            t_focus: units.to_solver(self.focus_time, Dimension::Time),
            weight: self.weight,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct SolverGaussian {
    sigma_k: f64,
    k_center: f64,
    x_focus: f64,
    t_focus: f64,
    weight: Complex64,
}

impl SolverGaussian {
    /// Momentum amplitude at t = 0 of a packet that is minimal at `t_focus`.
    fn amplitude(&self, k: f64) -> Complex64 {
        let s2 = self.sigma_k * self.sigma_k;
        let envelope = (2.0 * PI * s2).powf(-0.25) * (-(k - self.k_center).powi(2) / (4.0 * s2)).exp();
        let phase = -k * self.x_focus + 0.5 * k * k * self.t_focus;
        self.weight * Complex64::from_polar(envelope, phase)
    }
}

/// Wavenumber grid spanning every component's `k_c ± 8σ_k`, clamped to k > 0.
pub fn default_grid(specs: &[GaussianSpec], units: &UnitSystem, n_points: usize) -> Result<WavenumberGrid> {
    if specs.is_empty() {
        return Err(crate::error::invalid("specs", "at least one Gaussian component is required"));
    }
    let (lo, hi) = specs.iter().map(|s| s.to_solver(units)).fold(
        (f64::INFINITY, f64::NEG_INFINITY),
        |(lo, hi), g| (lo.min(g.k_center - 8.0 * g.sigma_k), hi.max(g.k_center + 8.0 * g.sigma_k)),
    );
    WavenumberGrid::covering(lo, hi, n_points)
}

/// Spatial derivatives of ψ_f at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivatives {
    pub value: Complex64,
    pub first: Complex64,
    pub second: Complex64,
}

/// Position moments at t = 0; free motion evolves them in closed form.
#[derive(Debug, Clone, Copy, PartialEq)]
struct PositionMoments {
    mean_x: f64,
    mean_x2: f64,
    /// ⟨(xk + kx)/2⟩
    mean_xk: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WavePacket {
    grid: WavenumberGrid,
    amplitude: Vec<Complex64>,
    ks: Vec<f64>,
    /// trapezoid weight × ψ̃ × (2π)^{-1/2}, the quadrature coefficients of ψ_f
    coeffs: Vec<Complex64>,
    units: UnitSystem,
    k0: f64,
    mean_k2: f64,
    moments: PositionMoments,
}

/// Builds the normalized coherent sum of Gaussian components.
pub fn build_superposition(
    specs: &[GaussianSpec],
    grid: WavenumberGrid,
    units: UnitSystem,
) -> Result<WavePacket> {
    if specs.is_empty() {
        return Err(crate::error::invalid("specs", "at least one Gaussian component is required"));
    }
    let solver: Vec<SolverGaussian> = specs.iter().map(|s| s.to_solver(&units)).collect();
    for (index, (spec, g)) in specs.iter().zip(&solver).enumerate() {
        if !(spec.delta_x.is_finite() && spec.delta_x > 0.0) {
            return Err(crate::error::invalid(
                "delta_x",
                format!("component {index}: must be > 0, got {}", spec.delta_x),
            ));
        }
        let margin = g.k_center / g.sigma_k;
        if !(margin >= POSITIVITY_MARGIN) {
            return Err(Error::PositivityMargin {
                index,
                k_center: g.k_center,
                margin,
                required: POSITIVITY_MARGIN,
            });
        }
        let per_spread = g.sigma_k / grid.spacing();
        if per_spread < POINTS_PER_SPREAD {
            return Err(Error::Resolution(format!(
                "component {index}: {per_spread:.2} grid points per momentum spread, need {POINTS_PER_SPREAD}"
            )));
        }
    }
    let amplitude: Vec<Complex64> = grid
        .points()
        .into_iter()
        .map(|k| solver.iter().map(|g| g.amplitude(k)).sum())
        .collect();
    let norm = norm_squared(&grid, &amplitude);
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::Normalization(norm));
    }
    let scale = norm.sqrt().recip();
    WavePacket::new(grid, amplitude.into_iter().map(|a| a * scale).collect(), units)
}

fn norm_squared(grid: &WavenumberGrid, amplitude: &[Complex64]) -> f64 {
    grid.weights()
        .iter()
        .zip(amplitude)
        .map(|(w, a)| w * a.norm_sqr())
        .sum()
}

impl WavePacket {
    /// Wraps a momentum amplitude sampled on `grid`; it must already be
    /// normalized and must vanish at the grid ends.
    pub fn new(grid: WavenumberGrid, amplitude: Vec<Complex64>, units: UnitSystem) -> Result<Self> {
        if amplitude.len() != grid.len() {
            return Err(crate::error::invalid(
                "amplitude",
                format!("{} samples for a {}-point grid", amplitude.len(), grid.len()),
            ));
        }
        let norm = norm_squared(&grid, &amplitude);
        if !((norm - 1.0).abs() <= NORM_TOLERANCE) {
            return Err(Error::Normalization(norm));
        }
        let peak = amplitude.iter().map(|a| a.norm()).fold(0.0, f64::max);
        let at_floor = grid.k_min() <= grid.spacing() * (1.0 + 1e-9);
        let lower = if at_floor { 0.0 } else { amplitude[0].norm() };
        let edge = lower.max(amplitude[amplitude.len() - 1].norm());
        if edge > ENDPOINT_LEAKAGE * peak {
            return Err(Error::Leakage { ratio: edge / peak });
        }

        let ks = grid.points();
        let weights = grid.weights();
        let inv_sqrt_2pi = (2.0 * PI).sqrt().recip();
        let coeffs = amplitude
            .iter()
            .zip(&weights)
            .map(|(a, w)| a * (w * inv_sqrt_2pi))
            .collect();
        let density: Vec<f64> = amplitude.iter().map(|a| a.norm_sqr()).collect();
        let k0 = dot(&weights, &density, &ks, |k| k);
        let mean_k2 = dot(&weights, &density, &ks, |k| k * k);
        let moments = position_moments(&grid, &amplitude, &ks, &weights);
        Ok(WavePacket {
            grid,
            amplitude,
            ks,
            coeffs,
            units,
            k0,
            mean_k2,
            moments,
        })
    }

    pub fn grid(&self) -> &WavenumberGrid {
        &self.grid
    }

    pub fn amplitude(&self) -> &[Complex64] {
        &self.amplitude
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.ks
    }

    pub fn units(&self) -> &UnitSystem {
        &self.units
    }

    /// ⟨k²⟩ = ∫ |ψ̃|² k² dk.
    pub fn mean_k2(&self) -> f64 {
        self.mean_k2
    }

    /// p₀ = ħ k₀ (solver units).
    pub fn p0(&self) -> f64 {
        self.k0
    }

    /// v₀ = ħ k₀ / m (solver units).
    pub fn v0(&self) -> f64 {
        self.k0
    }

    /// The same packet translated by `a`, i.e. ψ̃(k) e^{-ika}; evaluating the
    /// result at x is evaluating the original at x − a.
    pub fn shifted(&self, a: f64) -> WavePacket {
        if a == 0.0 {
            return self.clone();
        }
        let amplitude = self
            .amplitude
            .iter()
            .zip(&self.ks)
            .map(|(psi, &k)| psi * Complex64::from_polar(1.0, -k * a))
            .collect();
        WavePacket::new(self.grid, amplitude, self.units).expect("translation preserves the invariants")
    }

    /// Position centroid and standard deviation of ψ_f at time t.
    pub fn position_spread(&self, t: f64) -> (f64, f64) {
        let m = &self.moments;
        let mean = m.mean_x + t * self.k0;
        let second = m.mean_x2 + 2.0 * t * m.mean_xk + t * t * self.mean_k2;
        (mean, (second - mean * mean).max(0.0).sqrt())
    }

    /// Period of the trapezoid sum in x.
    pub fn alias_period(&self) -> f64 {
        2.0 * PI / self.grid.spacing()
    }

    /// Fails unless the nearest periodic image of ψ_f lies at least eight
    /// standard deviations from the packet at time t.
    pub fn check_window(&self, x: f64, t: f64) -> Result<()> {
        let period = self.alias_period();
        let (mean, sd) = self.position_spread(t);
        let reach = period - ALIAS_CLEARANCE * sd;
        if (x - mean).abs() <= reach && x.is_finite() && t.is_finite() {
            return Ok(());
        }
        // Times for which the clearance alone fits inside one period.
        let m = &self.moments;
        let var_k = (self.mean_k2 - self.k0 * self.k0).max(f64::MIN_POSITIVE);
        let cov = m.mean_xk - m.mean_x * self.k0;
        let var0 = m.mean_x2 - m.mean_x * m.mean_x;
        let t_center = -cov / var_k;
        let var_min = var0 - cov * cov / var_k;
        let limit = (period / ALIAS_CLEARANCE).powi(2);
        let t_half_width = ((limit - var_min) / var_k).max(0.0).sqrt();
        Err(Error::OutOfRange {
            x,
            t,
            x_lo: mean - reach,
            x_hi: mean + reach,
            t_center,
            t_half_width,
        })
    }

    /// ψ_f and its first two x-derivatives at (x, t), solver units.
    pub fn derivatives(&self, x: f64, t: f64) -> Result<Derivatives> {
        self.check_window(x, t)?;
        Ok(self.derivatives_unchecked(x, t))
    }

    pub(crate) fn derivatives_unchecked(&self, x: f64, t: f64) -> Derivatives {
        let (mut v, mut d1, mut d2) = (Complex64::default(), Complex64::default(), Complex64::default());
        for (c, &k) in self.coeffs.iter().zip(&self.ks) {
            let term = c * Complex64::from_polar(1.0, k * x - 0.5 * k * k * t);
            v += term;
            // i k term and -k² term
            d1 += Complex64::new(-k * term.im, k * term.re);
            d2 -= term * (k * k);
        }
        Derivatives {
            value: v,
            first: d1,
            second: d2,
        }
    }

    /// ∂ⁿψ_f/∂xⁿ at (x, t) for n ∈ {0, 1, 2}.
    pub fn free_value(&self, x: f64, t: f64, derivative_order: u8) -> Result<Complex64> {
        let d = self.derivatives(x, t)?;
        match derivative_order {
            0 => Ok(d.value),
            1 => Ok(d.first),
            2 => Ok(d.second),
            n => Err(crate::error::invalid(
                "derivative_order",
                format!("must be 0, 1 or 2, got {n}"),
            )),
        }
    }

    /// (2π)^{-1/2} ∫ dk ψ̃(k) f(k) e^{ikx − ik²t/2}, with an arbitrary
    /// multiplier `f`; callers check the window.
    pub(crate) fn weighted_value(&self, x: f64, t: f64, f: impl Fn(f64) -> f64) -> Complex64 {
        self.coeffs
            .iter()
            .zip(&self.ks)
            .map(|(c, &k)| c * (f(k) * Complex64::from_polar(1.0, k * x - 0.5 * k * k * t)))
            .sum()
    }

    /// ψ_f(x_i, t) on the uniform points `x0 + i·h`, i < n.
    pub fn sample_uniform(&self, x0: f64, h: f64, n: usize, t: f64) -> Vec<Complex64> {
        const REANCHOR: usize = 512;
        let mut out = vec![Complex64::default(); n];
        let steps: Vec<Complex64> = self.ks.iter().map(|&k| Complex64::from_polar(1.0, k * h)).collect();
        let mut rot = vec![Complex64::default(); self.ks.len()];
        for (i, slot) in out.iter_mut().enumerate() {
            if i % REANCHOR == 0 {
                let x = x0 + i as f64 * h;
                for ((r, c), &k) in rot.iter_mut().zip(&self.coeffs).zip(&self.ks) {
                    *r = c * Complex64::from_polar(1.0, k * x - 0.5 * k * k * t);
                }
            } else {
                for (r, s) in rot.iter_mut().zip(&steps) {
                    *r *= s;
                }
            }
            *slot = rot.iter().sum();
        }
        out
    }
}

/// k₀ = ∫ |ψ̃(k)|² k dk.
pub fn first_moment_k(packet: &WavePacket) -> f64 {
    packet.k0
}

fn dot(weights: &[f64], density: &[f64], ks: &[f64], f: impl Fn(f64) -> f64) -> f64 {
    weights
        .iter()
        .zip(density)
        .zip(ks)
        .map(|((w, d), &k)| w * d * f(k))
        .sum()
}

fn position_moments(
    grid: &WavenumberGrid,
    amplitude: &[Complex64],
    ks: &[f64],
    weights: &[f64],
) -> PositionMoments {
    let deriv = k_derivative(amplitude, grid.spacing());
    let i = Complex64::i();
    let (mut mean_x, mut mean_x2, mut mean_xk) = (0.0, 0.0, 0.0);
    for (((a, d), &k), w) in amplitude.iter().zip(&deriv).zip(ks).zip(weights) {
        // x acts as i d/dk on ψ̃
        mean_x += w * (a.conj() * i * d).re;
        mean_x2 += w * d.norm_sqr();
        mean_xk += w * (-i * d.conj() * a * k).re;
    }
    PositionMoments {
        mean_x,
        mean_x2,
        mean_xk,
    }
}

/// Fourth-order central difference in k, second order at the two ends of
/// each side.
fn k_derivative(f: &[Complex64], h: f64) -> Vec<Complex64> {
    let n = f.len();
    (0..n)
        .map(|j| {
            if j >= 2 && j + 2 < n {
                (f[j - 2] - f[j - 1] * 8.0 + f[j + 1] * 8.0 - f[j + 2]) / (12.0 * h)
            } else if j == 0 {
                (f[1] - f[0]) / h
            } else if j + 1 == n {
                (f[n - 1] - f[n - 2]) / h
            } else {
                (f[j + 1] - f[j - 1]) / (2.0 * h)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{CAESIUM_MASS, HBAR_LAB};
    use approx::assert_relative_eq;

    /// Length unit 1 μm keeps the analytic formulas readable.
    fn units() -> UnitSystem {
        UnitSystem::with_length_unit(HBAR_LAB, CAESIUM_MASS, 1.0).unwrap()
    }

    fn velocity_for_k(units: &UnitSystem, k: f64) -> f64 {
        units.to_user(k, Dimension::Velocity)
    }

    fn single(dx: f64, k: f64, x_f: f64, t_f: f64) -> WavePacket {
        let u = units();
        let spec = GaussianSpec::new(dx, velocity_for_k(&u, k)).focused_at(x_f, u.to_user(t_f, Dimension::Time));
        let grid = default_grid(&[spec], &u, 1024).unwrap();
        build_superposition(&[spec], grid, u).unwrap()
    }

    #[test]
    fn single_gaussian_mean() {
        let p = single(0.5, 20.0, 0.0, 0.0);
        assert_relative_eq!(first_moment_k(&p), 20.0, max_relative = 1e-6);
    }

    #[test]
    fn peak_density_at_focus() {
        let dx = 0.5;
        let p = single(dx, 20.0, 1.5, 0.7);
        let psi = p.free_value(1.5, 0.7, 0).unwrap();
        // ±8σ_k truncation of the amplitude integral limits this to ~1e-8
        assert_relative_eq!(psi.norm_sqr(), (2.0 * PI * dx * dx).powf(-0.5), max_relative = 1e-7);
        // envelope is flat at the center, so ψ' = i k₀ ψ
        let d1 = p.free_value(1.5, 0.7, 1).unwrap();
        let expected = Complex64::i() * 20.0 * psi;
        assert!((d1 - expected).norm() < 1e-8 * expected.norm());
    }

    #[test]
    fn matches_analytic_gaussian_at_t0() {
        let dx = 0.4;
        let k = 15.0;
        let p = single(dx, k, 0.0, 0.0);
        for x in [-1.0, -0.3, 0.0, 0.25, 0.9] {
            let exact = Complex64::from_polar(
                (2.0 * PI * dx * dx).powf(-0.25) * (-(x * x) / (4.0 * dx * dx)).exp(),
                k * x,
            );
            let got = p.free_value(x, 0.0, 0).unwrap();
            assert!((got - exact).norm() < 1e-6, "x = {x}: {got} vs {exact}");
        }
    }

    #[test]
    fn equal_halves_reproduce_single() {
        let u = units();
        let spec = GaussianSpec::new(0.3, velocity_for_k(&u, 12.0)).focused_at(0.2, 1.0);
        let half = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let grid = default_grid(&[spec], &u, 800).unwrap();
        let one = build_superposition(&[spec], grid, u).unwrap();
        let two = build_superposition(&[spec.with_weight(half), spec.with_weight(half)], grid, u).unwrap();
        for (a, b) in one.amplitude().iter().zip(two.amplitude()) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn positivity_margin_enforced() {
        let u = units();
        // σ_k = 1/(2·0.1) = 5, k = 15 gives a margin of 3
        let spec = GaussianSpec::new(0.1, velocity_for_k(&u, 15.0));
        let grid = WavenumberGrid::new(0.1, 60.0, 2048).unwrap();
        match build_superposition(&[spec], grid, u) {
            Err(Error::PositivityMargin { index: 0, margin, .. }) => assert_relative_eq!(margin, 3.0, max_relative = 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn coarse_grid_rejected() {
        let u = units();
        let spec = GaussianSpec::new(0.1, velocity_for_k(&u, 40.0));
        let grid = WavenumberGrid::new(0.1, 80.0, 60).unwrap();
        assert!(matches!(build_superposition(&[spec], grid, u), Err(Error::Resolution(_))));
    }

    #[test]
    fn truncated_grid_rejected() {
        let u = units();
        let spec = GaussianSpec::new(0.1, velocity_for_k(&u, 40.0));
        let grid = WavenumberGrid::new(35.0, 80.0, 600).unwrap();
        assert!(matches!(build_superposition(&[spec], grid, u), Err(Error::Leakage { .. })));
    }

    #[test]
    fn unnormalized_amplitude_rejected() {
        let p = single(0.5, 20.0, 0.0, 0.0);
        let doubled = p.amplitude().iter().map(|a| a * 2.0).collect();
        assert!(matches!(
            WavePacket::new(*p.grid(), doubled, *p.units()),
            Err(Error::Normalization(_))
        ));
    }

    #[test]
    fn delta_like_packet() {
        // Δk comparable to the grid spacing: k₀ lands within one bin of the center.
        let u = units();
        let k = 10.0;
        let spec = GaussianSpec::new(50.0, velocity_for_k(&u, k));
        let sigma = 0.5 / 50.0;
        let grid = WavenumberGrid::new(k - 8.0 * sigma, k + 8.0 * sigma, 130).unwrap();
        let p = build_superposition(&[spec], grid, u).unwrap();
        assert!((first_moment_k(&p) - k).abs() <= grid.spacing());
    }

    #[test]
    fn second_derivative_matches_finite_difference() {
        let p = single(0.3, 12.0, 0.5, 0.02);
        let h = 1e-3;
        for (x, t) in [(0.1, 0.0), (0.6, 0.01), (-0.2, 0.03)] {
            let d2 = p.free_value(x, t, 2).unwrap();
            let fd = (p.free_value(x + h, t, 0).unwrap() - p.free_value(x, t, 0).unwrap() * 2.0
                + p.free_value(x - h, t, 0).unwrap())
                / (h * h);
            // truncation error ψ''''h²/12 ~ k²h²/12 relative to ψ''
            assert!((d2 - fd).norm() < 5e-5 * d2.norm(), "({x}, {t})");
        }
    }

    #[test]
    fn window_violation_reports_bounds() {
        let p = single(0.5, 20.0, 0.0, 0.0);
        let period = p.alias_period();
        match p.free_value(2.0 * period, 0.0, 0) {
            Err(Error::OutOfRange { x_lo, x_hi, .. }) => {
                assert!(x_lo < 0.0 && x_hi > 0.0 && x_hi < period);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(p.free_value(0.0, 0.0, 3), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn moments_follow_free_motion() {
        let dx = 0.5;
        let p = single(dx, 12.0, 0.4, 0.3);
        // moments use a finite-difference dψ̃/dk; they only size the alias window
        let (mean, sd) = p.position_spread(0.3);
        assert_relative_eq!(mean, 0.4, epsilon = 1e-5);
        assert_relative_eq!(sd, dx, max_relative = 1e-5);
        let (mean, sd) = p.position_spread(1.3);
        let spread = 1.0 / (2.0 * dx * dx);
        assert_relative_eq!(mean, 0.4 + 12.0, max_relative = 1e-6);
        assert_relative_eq!(sd, dx * (1.0 + spread * spread).sqrt(), max_relative = 1e-5);
    }

    #[test]
    fn uniform_sampling_matches_pointwise() {
        let p = single(0.3, 12.0, 0.0, 0.1);
        let xs = p.sample_uniform(-2.0, 0.01, 1500, 0.05);
        for i in [0, 1, 511, 512, 777, 1499] {
            let x = -2.0 + i as f64 * 0.01;
            let direct = p.free_value(x, 0.05, 0).unwrap();
            assert!((xs[i] - direct).norm() < 1e-12, "i = {i}");
        }
    }

    #[test]
    fn spec_parses_from_toml() {
        let spec: GaussianSpec = toml::from_str(
            "delta_x = 0.031\nmean_velocity = 18.96\nfocus_time = 2.0\nweight = [0.6, 0.0]",
        )
        .unwrap();
        assert_eq!(spec.focus_position, 0.0);
        assert_eq!(spec.weight, Complex64::new(0.6, 0.0));
        assert!(toml::from_str::<GaussianSpec>("delta_x = 1.0\nmean_velocity = 1.0\nbogus = 1").is_err());
    }
}
