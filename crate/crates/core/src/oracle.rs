//! Brute-force propagation of a packet on a uniform position grid under
//! `H = p²/2 − iV χ_[a, a+L](x)`, by Strang splitting with exact periodic
//! kinetic steps and exact potential half-steps.
//!
//! The grid is laid out so that both barrier edges fall on cell boundaries;
//! membership is decided at cell centers.
//!
//! The sharp barrier edges scatter weakly into every grid mode. Modes whose
//! kinetic phase per step `k²dt/2` exceeds 2π alias onto slow phases and
//! accumulate that scattering step after step; [`resonance_free_step`] gives
//! the largest step that keeps the whole grid below this.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::absorber::BarrierSpec;
use crate::error::{invalid, Error, Result};
use crate::grid::{TimeGrid, TimeSeries};
use crate::wavepacket::WavePacket;

/// Default largest |ψ| at the domain edges, relative to the peak.
pub const BOUNDARY_THRESHOLD: f64 = 1e-8;

/// Upper bound on both `k_max² dt / 2` and `V dt`.
pub const STABILITY_LIMIT: f64 = 0.1;

/// Spatial domain, resolution and time step of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub x_lo: f64,
    pub x_hi: f64,
    /// Power of two.
    pub n_x: usize,
    /// Requested step; shortened so that it divides the record spacing.
    pub dt: f64,
    /// Time at which the free packet is put on the grid; defaults to the
    /// start of the record grid.
    pub t_start: Option<f64>,
    /// Largest |ψ| at the domain edges, relative to the peak, tolerated at
    /// any recorded time.
    pub boundary_tolerance: f64,
}

impl OracleConfig {
    pub fn new(x_lo: f64, x_hi: f64, n_x: usize, dt: f64) -> Self {
        OracleConfig {
            x_lo,
            x_hi,
            n_x,
            dt,
            t_start: None,
            boundary_tolerance: BOUNDARY_THRESHOLD,
        }
    }

    pub fn starting_at(mut self, t_start: f64) -> Self {
        self.t_start = Some(t_start);
        self
    }

    pub fn with_boundary_tolerance(mut self, tolerance: f64) -> Self {
        self.boundary_tolerance = tolerance;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridState {
    pub x_min: f64,
    pub x_max: f64,
    pub n_x: usize,
    pub psi: Vec<Complex64>,
    pub t: f64,
}

impl GridState {
    pub fn spacing(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_x as f64
    }

    /// Cell-center coordinate of sample `i`.
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.spacing()
    }

    pub fn norm(&self) -> f64 {
        self.psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.spacing()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleSample {
    pub t: f64,
    pub norm: f64,
    /// ∫ |ψ|² over the barrier.
    pub occupancy: f64,
    /// −dN/dt from the norms one step either side.
    pub norm_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRun {
    pub barrier: Option<BarrierSpec>,
    pub grid: TimeGrid,
    pub samples: Vec<OracleSample>,
    pub dt: f64,
    pub t_start: f64,
    pub final_state: GridState,
}

struct Stepper {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    kinetic: Vec<Complex64>,
    absorb: f64,
    cells: std::ops::Range<usize>,
}

impl Stepper {
    fn step(&mut self, psi: &mut [Complex64]) {
        self.potential_half(psi);
        self.forward.process_with_scratch(psi, &mut self.scratch);
        for (z, k) in psi.iter_mut().zip(&self.kinetic) {
            *z *= k;
        }
        self.inverse.process_with_scratch(psi, &mut self.scratch);
        self.potential_half(psi);
    }

    fn potential_half(&self, psi: &mut [Complex64]) {
        for z in &mut psi[self.cells.clone()] {
            *z *= self.absorb;
        }
    }
}

/// Largest dt for which every grid mode turns by less than 2π per step.
pub fn resonance_free_step(config: &OracleConfig) -> f64 {
    let h = (config.x_hi - config.x_lo) / config.n_x as f64;
    let k_nyquist = PI / h;
    4.0 * PI / (k_nyquist * k_nyquist)
}

/// Places the grid: spacing and origin chosen so that the barrier is an
/// exact union of cells.
fn layout(config: &OracleConfig, barrier: Option<&BarrierSpec>) -> (f64, f64, std::ops::Range<usize>) {
    let h_target = (config.x_hi - config.x_lo) / config.n_x as f64;
    match barrier {
        None => (config.x_lo, h_target, 0..0),
        Some(b) => {
            let cells = (b.length / h_target).floor().max(1.0);
            let h = b.length / cells;
            let x_min = b.offset + ((config.x_lo - b.offset) / h).floor() * h;
            let first = ((b.offset - x_min) / h).round() as usize;
            let last = (first + cells as usize).min(config.n_x);
            (x_min, h, first.min(config.n_x)..last)
        }
    }
}

fn validate(initial: &WavePacket, config: &OracleConfig, h: f64) -> Result<()> {
    if !config.n_x.is_power_of_two() || config.n_x < 16 {
        return Err(invalid("n_x", format!("must be a power of two ≥ 16, got {}", config.n_x)));
    }
    if !(config.x_hi > config.x_lo) {
        return Err(invalid("domain", "need x_lo < x_hi"));
    }
    if !(config.dt.is_finite() && config.dt > 0.0) {
        return Err(invalid("dt", format!("must be > 0, got {}", config.dt)));
    }
    let k_max = initial.grid().k_max();
    if PI / h < 2.0 * k_max {
        return Err(Error::Resolution(format!(
            "grid wavenumber limit {:.3e} below twice the packet's k_max {k_max:.3e}",
            PI / h
        )));
    }
    Ok(())
}

fn check_stability(initial: &WavePacket, barrier: Option<&BarrierSpec>, dt: f64) -> Result<()> {
    let k_max = initial.grid().k_max();
    let kinetic = 0.5 * k_max * k_max * dt;
    if kinetic >= STABILITY_LIMIT {
        return Err(Error::Stability(format!("k_max² dt / 2 = {kinetic:.3e} ≥ {STABILITY_LIMIT}")));
    }
    if let Some(b) = barrier {
        let absorb = b.height * dt;
        if absorb >= STABILITY_LIMIT {
            return Err(Error::Stability(format!("V dt = {absorb:.3e} ≥ {STABILITY_LIMIT}")));
        }
    }
    Ok(())
}

fn boundary_ratio(psi: &[Complex64]) -> f64 {
    let peak = psi.iter().fold(0.0, |m: f64, z| m.max(z.norm()));
    let edge = psi[0].norm().max(psi[psi.len() - 1].norm());
    edge / peak
}

/// Propagates `initial` (free up to the start time) through the barrier and
/// records norm and barrier occupancy at every time of `tgrid`. `None`
/// propagates freely.
pub fn propagate(
    initial: &WavePacket,
    barrier: Option<&BarrierSpec>,
    config: &OracleConfig,
    tgrid: &TimeGrid,
) -> Result<OracleRun> {
    let (x_min, h, cells) = layout(config, barrier);
    validate(initial, config, h)?;
    let n = config.n_x;

    let record = tgrid.step();
    let substeps = (record / config.dt - 1e-9).ceil().max(1.0) as usize;
    let dt = record / substeps as f64;
    check_stability(initial, barrier, dt)?;
    let requested_start = config.t_start.unwrap_or(tgrid.t_min()).min(tgrid.t_min());
    // at least one step before the first record, for the centered norm rate
    let lead = ((tgrid.t_min() - requested_start) / dt - 1e-9).ceil().max(1.0) as usize;
    let t_start = tgrid.t_min() - lead as f64 * dt;

    let x_max = x_min + n as f64 * h;
    initial.check_window(x_min, t_start)?;
    initial.check_window(x_max, t_start)?;
    let mut state = GridState {
        x_min,
        x_max,
        n_x: n,
        psi: initial.sample_uniform(x_min + 0.5 * h, h, n, t_start),
        t: t_start,
    };
    let ratio = boundary_ratio(&state.psi);
    if ratio > config.boundary_tolerance {
        return Err(Error::BoundaryContamination { t: t_start, ratio });
    }

    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
    let dk = 2.0 * PI / (n as f64 * h);
    let kinetic = (0..n)
        .map(|m| {
            let signed = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
            let k = signed * dk;
            Complex64::from_polar(1.0 / n as f64, -0.5 * k * k * dt)
        })
        .collect();
    let height = barrier.map_or(0.0, |b| b.height);
    let mut stepper = Stepper {
        forward,
        inverse,
        scratch: vec![Complex64::default(); scratch_len],
        kinetic,
        absorb: (-0.5 * height * dt).exp(),
        cells: cells.clone(),
    };

    let occupancy = |psi: &[Complex64]| psi[cells.clone()].iter().map(|z| z.norm_sqr()).sum::<f64>() * h;
    let norm = |psi: &[Complex64]| psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * h;

    let total = lead + substeps * (tgrid.len() - 1) + 1;
    let mut samples: Vec<OracleSample> = Vec::with_capacity(tgrid.len());
    let mut previous_norm = norm(&state.psi);
    // a recorded sample waiting for N(t + dt), with N(t − dt)
    let mut pending: Option<(OracleSample, f64)> = None;
    for s in 1..=total {
        stepper.step(&mut state.psi);
        state.t = t_start + s as f64 * dt;
        let record = (s >= lead && (s - lead).is_multiple_of(substeps))
            .then(|| (s - lead) / substeps)
            .filter(|&i| i < tgrid.len());
        let before_record = s + 1 >= lead && (s + 1 - lead).is_multiple_of(substeps);
        if record.is_none() && pending.is_none() && !before_record {
            continue;
        }
        let current = norm(&state.psi);
        if let Some((mut sample, before)) = pending.take() {
            sample.norm_rate = (before - current) / (2.0 * dt);
            samples.push(sample);
        }
        if let Some(index) = record {
            let t = tgrid.t(index);
            let ratio = boundary_ratio(&state.psi);
            if ratio > config.boundary_tolerance {
                return Err(Error::BoundaryContamination { t, ratio });
            }
            let sample = OracleSample {
                t,
                norm: current,
                occupancy: occupancy(&state.psi),
                norm_rate: f64::NAN,
            };
            pending = Some((sample, previous_norm));
        }
        previous_norm = current;
    }
    Ok(OracleRun {
        barrier: barrier.copied(),
        grid: *tgrid,
        samples,
        dt,
        t_start,
        final_state: state,
    })
}

/// Π(t) = 2V × barrier occupancy on the run's record grid.
pub fn oracle_rate(run: &OracleRun) -> TimeSeries {
    let height = run.barrier.map_or(0.0, |b| b.height);
    TimeSeries {
        grid: run.grid,
        values: run.samples.iter().map(|s| 2.0 * height * s.occupancy).collect(),
    }
}

/// −dN/dt at every record time.
pub fn norm_loss_rate(run: &OracleRun) -> TimeSeries {
    TimeSeries {
        grid: run.grid,
        values: run.samples.iter().map(|s| s.norm_rate).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{Dimension, UnitSystem, CAESIUM_MASS, HBAR_LAB};
    use crate::wavepacket::{build_superposition, default_grid, GaussianSpec};

    fn packet() -> WavePacket {
        let u = UnitSystem::with_length_unit(HBAR_LAB, CAESIUM_MASS, 1.0).unwrap();
        let spec = GaussianSpec::new(1.0, u.to_user(6.0, Dimension::Velocity)).focused_at(-8.0, 0.0);
        build_superposition(&[spec], default_grid(&[spec], &u, 512).unwrap(), u).unwrap()
    }

    fn config(n_x: usize, dt: f64) -> OracleConfig {
        OracleConfig::new(-80.0, 80.0, n_x, dt)
    }

    #[test]
    fn free_propagation_matches_quadrature() {
        let p = packet();
        let g = TimeGrid::new(0.0, 2.5, 6).unwrap();
        let run = propagate(&p, None, &config(4096, 1e-3), &g).unwrap();
        let n0 = run.samples[0].norm;
        for s in &run.samples {
            assert!((s.norm - n0).abs() < 1e-10);
        }
        let st = &run.final_state;
        let t = st.t;
        let peak = p.derivatives(p.position_spread(t).0, t).unwrap().value.norm_sqr();
        for i in (0..st.n_x).step_by(97).filter(|&i| (st.x(i) - p.position_spread(t).0).abs() < 8.0) {
            let exact = p.free_value(st.x(i), t, 0).unwrap().norm_sqr();
            assert!((st.psi[i].norm_sqr() - exact).abs() < 1e-6 * peak, "x = {}", st.x(i));
        }
    }

    #[test]
    fn norm_loss_matches_occupancy() {
        let p = packet();
        let barrier = BarrierSpec::new(3.0, 2.0, 0.0).unwrap();
        let g = TimeGrid::new(0.0, 3.0, 61).unwrap();
        let run = propagate(&p, Some(&barrier), &config(4096, 1e-3), &g).unwrap();
        let rate = oracle_rate(&run);
        let loss = norm_loss_rate(&run);
        let i = rate.values.iter().enumerate().fold(0, |b, (i, &v)| if v > rate.values[b] { i } else { b });
        assert!((rate.values[i] - loss.values[i]).abs() < 1e-4 * rate.values[i]);
        for w in run.samples.windows(2) {
            assert!(w[1].norm <= w[0].norm + 1e-12);
        }
        assert!(run.samples[0].norm <= 1.0 + 1e-10);
    }

    #[test]
    fn barrier_edges_on_cell_boundaries() {
        let cfg = OracleConfig::new(-40.0, 40.0, 1024, 1e-3);
        let b = BarrierSpec::new(1.0, 0.37, 0.11).unwrap();
        let (x_min, h, cells) = layout(&cfg, Some(&b));
        assert!((x_min + cells.start as f64 * h - b.offset).abs() < 1e-12);
        assert!((x_min + cells.end as f64 * h - (b.offset + b.length)).abs() < 1e-12);
        assert!(h >= (cfg.x_hi - cfg.x_lo) / cfg.n_x as f64);
        assert!(x_min <= cfg.x_lo);
    }

    #[test]
    fn rejects_unstable_and_malformed() {
        let p = packet();
        let g = TimeGrid::new(0.0, 1.0, 11).unwrap();
        let b = BarrierSpec::new(500.0, 1.0, 0.0).unwrap();
        assert!(matches!(
            propagate(&p, Some(&b), &config(4096, 1e-3), &g),
            Err(Error::Stability(_))
        ));
        assert!(propagate(&p, None, &config(3000, 1e-3), &g).is_err());
    }

    #[test]
    fn contamination_detected() {
        let p = packet();
        let g = TimeGrid::new(0.0, 1.0, 11).unwrap();
        let narrow = OracleConfig::new(-12.0, 12.0, 1024, 1e-3);
        assert!(matches!(
            propagate(&p, None, &narrow, &g),
            Err(Error::BoundaryContamination { .. })
        ));
    }

    #[test]
    fn grid_doubling_converges() {
        let p = packet();
        let barrier = BarrierSpec::new(0.5, 2.0, 0.0).unwrap();
        let g = TimeGrid::new(0.0, 2.0, 21).unwrap();
        let rate = |n| {
            let cfg = OracleConfig::new(-20.0, 20.0, n, 0.0);
            let cfg = OracleConfig { dt: 0.9 * resonance_free_step(&cfg), ..cfg };
            oracle_rate(&propagate(&p, Some(&barrier), &cfg, &g).unwrap())
        };
        let (a, b) = (rate(4096), rate(8192));
        let change = a.sup_distance(&b, &b);
        assert!(change < 1e-5, "{change}");
    }

    #[test]
    fn rate_integral_is_norm_loss() {
        let p = packet();
        let barrier = BarrierSpec::new(3.0, 2.0, 0.0).unwrap();
        let g = TimeGrid::new(0.0, 3.0, 601).unwrap();
        let run = propagate(&p, Some(&barrier), &config(4096, 1e-3), &g).unwrap();
        let lost = run.samples[0].norm - run.samples[run.samples.len() - 1].norm;
        let integral = crate::grid::trapezoid_integral(&oracle_rate(&run)).unwrap();
        assert!((integral - lost).abs() < 1e-4, "{integral} vs {lost}");
    }
}
