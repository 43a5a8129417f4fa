//! Scenario configuration: a TOML file of `key = value` lines grouped under
//! bracketed sections. All quantities are in user units (μm, μs, cm/s,
//! ħ/μs, 1/μs, kg).

use std::path::PathBuf;

use num_complex::Complex64;
use qkinetic::absorber::BarrierSpec;
use qkinetic::detection::LaserSpec;
use qkinetic::oracle::OracleConfig;
use qkinetic::units::{Dimension, UnitSystem, HBAR_SI};
use qkinetic::wavepacket::{default_grid, GaussianSpec, POSITIVITY_MARGIN};
use qkinetic::{build_superposition, Error, TimeGrid, WavePacket, WavenumberGrid};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub units: UnitsConfig,
    #[serde(default, rename = "packet")]
    pub packets: Vec<GaussianSpec>,
    #[serde(default, rename = "barrier")]
    pub barriers: Vec<BarrierConfig>,
    #[serde(default)]
    pub laser: Option<LaserConfig>,
    #[serde(default = "TimeConfig::fig1")]
    pub time: TimeConfig,
    /// Window covering the whole passage of the packet, for sum rules,
    /// deconvolution and arrival-time distributions.
    #[serde(default = "TimeConfig::coverage")]
    pub coverage_time: TimeConfig,
    #[serde(default)]
    pub wavenumber: WavenumberConfig,
    #[serde(default)]
    pub observer: ObserverConfig,
    #[serde(default)]
    pub validate: ValidateConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitsConfig {
    /// kg
    pub mass: f64,
    /// J·s
    #[serde(default = "default_hbar")]
    pub hbar: f64,
    /// μs per solver time unit
    #[serde(default = "one")]
    pub time_unit: f64,
}

impl Default for UnitsConfig {
    fn default() -> Self {
        UnitsConfig {
            mass: qkinetic::units::CAESIUM_MASS,
            hbar: HBAR_SI,
            time_unit: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarrierConfig {
    /// ħ/μs
    pub height: f64,
    /// μm
    pub length: f64,
    /// μm
    #[serde(default)]
    pub offset: f64,
    #[serde(default)]
    pub oracle: Option<OracleSettings>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSettings {
    pub x_lo: f64,
    pub x_hi: f64,
    pub n_x: usize,
    pub dt: f64,
    #[serde(default)]
    pub t_start: Option<f64>,
    #[serde(default = "default_boundary_tolerance")]
    pub boundary_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserConfig {
    /// 1/μs
    pub gamma: f64,
    /// 1/μs; absent or `inf` for the strong-driving limit
    #[serde(default)]
    pub rabi: Option<f64>,
    #[serde(default = "default_mode")]
    pub mode: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    pub t_min: f64,
    pub t_max: f64,
    pub n_points: usize,
}

impl TimeConfig {
    fn fig1() -> Self {
        TimeConfig {
            t_min: 0.0,
            t_max: 6.0,
            n_points: 2001,
        }
    }

    fn coverage() -> Self {
        TimeConfig {
            t_min: -4.0,
            t_max: 10.0,
            n_points: 4001,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WavenumberConfig {
    pub n_points: usize,
    /// 1/μm; both bounds or neither
    #[serde(default)]
    pub k_min: Option<f64>,
    #[serde(default)]
    pub k_max: Option<f64>,
}

impl Default for WavenumberConfig {
    fn default() -> Self {
        WavenumberConfig {
            n_points: 2048,
            k_min: None,
            k_max: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObserverConfig {
    /// μm
    pub x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValidateConfig {
    /// Barrier entry used for the dt-halving check.
    pub convergence_barrier: usize,
    pub convergence_n_x: usize,
    /// μs
    pub convergence_dt: f64,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        ValidateConfig {
            convergence_barrier: 0,
            convergence_n_x: 4096,
            convergence_dt: 1e-3,
        }
    }
}

fn default_hbar() -> f64 {
    HBAR_SI
}

fn one() -> f64 {
    1.0
}

fn default_boundary_tolerance() -> f64 {
    qkinetic::oracle::BOUNDARY_THRESHOLD
}

fn default_mode() -> String {
    "fourier".into()
}

impl ScenarioConfig {
    /// Two caesium packets, Δx = 0.031 μm, 18.96 and 5.34 cm/s, both focusing
    /// at x = 0, t = 2 μs, observed through two imaginary barriers.
    pub fn fig1() -> Self {
        let w = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let packet = |v| GaussianSpec::new(0.031, v).focused_at(0.0, 2.0).with_weight(w);
        ScenarioConfig {
            out_dir: None,
            units: UnitsConfig::default(),
            packets: vec![packet(18.96), packet(5.34)],
            barriers: vec![
                BarrierConfig {
                    height: 1.9,
                    length: 0.21,
                    offset: 0.0,
                    oracle: Some(OracleSettings {
                        x_lo: -1.6,
                        x_hi: 1.6,
                        n_x: 8192,
                        dt: 2e-4,
                        t_start: Some(-3.0),
                        boundary_tolerance: 1e-4,
                    }),
                },
                BarrierConfig {
                    height: 950.0,
                    length: 0.42,
                    offset: 0.0,
                    oracle: Some(OracleSettings {
                        x_lo: -1.4,
                        x_hi: 0.5,
                        n_x: 32768,
                        dt: 2e-5,
                        t_start: Some(-3.0),
                        boundary_tolerance: 3e-3,
                    }),
                },
            ],
            laser: Some(LaserConfig {
                gamma: 400.0,
                rabi: None,
                mode: default_mode(),
            }),
            time: TimeConfig::fig1(),
            coverage_time: TimeConfig::coverage(),
            wavenumber: WavenumberConfig::default(),
            observer: ObserverConfig::default(),
            validate: ValidateConfig::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| Error::Config(vec![e.to_string()]))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is serializable")
    }

    /// Checks every constraint and converts to solver units; all violations
    /// are reported together.
    pub fn validate(&self) -> Result<Scenario, Error> {
        let mut errors = Vec::new();
        let mut check = |ok: bool, msg: String| {
            if !ok {
                errors.push(msg);
            }
        };
        let positive = |v: f64| v.is_finite() && v > 0.0;

        let u = &self.units;
        check(positive(u.mass), format!("units.mass must be > 0, got {}", u.mass));
        check(positive(u.hbar), format!("units.hbar must be > 0, got {}", u.hbar));
        check(positive(u.time_unit), format!("units.time_unit must be > 0, got {}", u.time_unit));
        let units = UnitSystem::with_time_unit(u.hbar * 1e6, u.mass, u.time_unit).ok();

        check(!self.packets.is_empty(), "at least one [[packet]] is required".into());
        for (i, p) in self.packets.iter().enumerate() {
            check(positive(p.delta_x), format!("packet[{i}].delta_x must be > 0, got {}", p.delta_x));
            check(p.mean_velocity.is_finite(), format!("packet[{i}].mean_velocity must be finite"));
            check(
                p.focus_position.is_finite() && p.focus_time.is_finite(),
                format!("packet[{i}] focus must be finite"),
            );
            check(
                p.weight.re.is_finite() && p.weight.im.is_finite() && p.weight.norm() > 0.0,
                format!("packet[{i}].weight must be finite and nonzero"),
            );
            if let Some(units) = &units {
                if positive(p.delta_x) {
                    let k = units.to_solver(p.mean_velocity, Dimension::Velocity);
                    let sigma = 0.5 / units.to_solver(p.delta_x, Dimension::Length);
                    check(
                        k >= POSITIVITY_MARGIN * sigma,
                        format!(
                            "packet[{i}]: mean momentum is {:.3} momentum spreads above zero, needs ≥ {POSITIVITY_MARGIN}",
                            k / sigma
                        ),
                    );
                }
            }
        }

        for (i, b) in self.barriers.iter().enumerate() {
            check(positive(b.height), format!("barrier[{i}].height must be > 0, got {}", b.height));
            check(positive(b.length), format!("barrier[{i}].length must be > 0, got {}", b.length));
            check(b.offset.is_finite(), format!("barrier[{i}].offset must be finite"));
            if let Some(o) = &b.oracle {
                check(
                    o.n_x.is_power_of_two() && o.n_x >= 16,
                    format!("barrier[{i}].oracle.n_x must be a power of two ≥ 16, got {}", o.n_x),
                );
                check(o.x_hi > o.x_lo, format!("barrier[{i}].oracle needs x_lo < x_hi"));
                check(positive(o.dt), format!("barrier[{i}].oracle.dt must be > 0, got {}", o.dt));
                check(
                    positive(o.boundary_tolerance),
                    format!("barrier[{i}].oracle.boundary_tolerance must be > 0"),
                );
                if let Some(t0) = o.t_start {
                    check(
                        t0 <= self.time.t_min,
                        format!("barrier[{i}].oracle.t_start must not exceed time.t_min"),
                    );
                }
            }
        }

        if let Some(l) = &self.laser {
            check(positive(l.gamma), format!("laser.gamma must be > 0, got {}", l.gamma));
            if let Some(r) = l.rabi {
                check(r > 0.0, format!("laser.rabi must be > 0, got {r}"));
            }
            check(
                matches!(l.mode.as_str(), "fourier" | "timedomain"),
                format!("laser.mode must be fourier or timedomain, got {}", l.mode),
            );
        }

        for (name, t) in [("time", &self.time), ("coverage_time", &self.coverage_time)] {
            check(t.n_points >= 2, format!("{name}.n_points must be ≥ 2, got {}", t.n_points));
            check(
                t.t_min.is_finite() && t.t_max.is_finite() && t.t_max > t.t_min,
                format!("{name} needs t_min < t_max"),
            );
        }
        let w = &self.wavenumber;
        check(w.n_points >= 2, format!("wavenumber.n_points must be ≥ 2, got {}", w.n_points));
        match (w.k_min, w.k_max) {
            (Some(lo), Some(hi)) => check(
                positive(lo) && hi > lo,
                format!("wavenumber needs 0 < k_min < k_max, got [{lo}, {hi}]"),
            ),
            (None, None) => {}
            _ => check(false, "wavenumber.k_min and k_max must be given together".into()),
        }
        check(self.observer.x.is_finite(), "observer.x must be finite".into());
        let v = &self.validate;
        check(
            self.barriers.is_empty() || v.convergence_barrier < self.barriers.len(),
            format!("validate.convergence_barrier {} out of range", v.convergence_barrier),
        );
        check(
            v.convergence_n_x.is_power_of_two(),
            format!("validate.convergence_n_x must be a power of two, got {}", v.convergence_n_x),
        );
        check(positive(v.convergence_dt), "validate.convergence_dt must be > 0".into());

        if !errors.is_empty() {
            return Err(Error::Config(errors));
        }
        let units = units.expect("checked above");
        self.build(units)
    }

    fn build(&self, units: UnitSystem) -> Result<Scenario, Error> {
        let mut errors = Vec::new();
        let grid = match (self.wavenumber.k_min, self.wavenumber.k_max) {
            (Some(lo), Some(hi)) => WavenumberGrid::new(
                units.to_solver(lo, Dimension::Wavenumber),
                units.to_solver(hi, Dimension::Wavenumber),
                self.wavenumber.n_points,
            ),
            _ => default_grid(&self.packets, &units, self.wavenumber.n_points),
        };
        let packet = grid.and_then(|g| build_superposition(&self.packets, g, units));
        let packet = match packet {
            Ok(p) => Some(p),
            Err(e) => {
                errors.push(format!("packet: {e}"));
                None
            }
        };
        let solver_time = |t: &TimeConfig| {
            TimeGrid::new(t.t_min, t.t_max, t.n_points).map(|g| (g, g.scaled(1.0 / units.time_unit)))
        };
        let time = solver_time(&self.time);
        let coverage = solver_time(&self.coverage_time);
        let len = |v| units.to_solver(v, Dimension::Length);
        let barriers: Vec<BarrierEntry> = self
            .barriers
            .iter()
            .enumerate()
            .filter_map(|(i, b)| {
                let spec = BarrierSpec::new(units.to_solver(b.height, Dimension::Energy), len(b.length), len(b.offset));
                match spec {
                    Ok(spec) => Some(BarrierEntry {
                        user: b.clone(),
                        spec,
                        oracle: b.oracle.map(|o| {
                            let cfg = OracleConfig::new(len(o.x_lo), len(o.x_hi), o.n_x, units.to_solver(o.dt, Dimension::Time))
                                .with_boundary_tolerance(o.boundary_tolerance);
                            match o.t_start {
                                Some(t) => cfg.starting_at(units.to_solver(t, Dimension::Time)),
                                None => cfg,
                            }
                        }),
                    }),
                    Err(e) => {
                        errors.push(format!("barrier[{i}]: {e}"));
                        None
                    }
                }
            })
            .collect();
        let laser = self.laser.as_ref().and_then(|l| {
            let rabi = l.rabi.filter(|r| r.is_finite()).map(|r| units.to_solver(r, Dimension::Rate));
            match LaserSpec::new(units.to_solver(l.gamma, Dimension::Rate), rabi) {
                Ok(spec) => Some(LaserEntry {
                    spec,
                    mode: l.mode.parse().expect("mode checked"),
                }),
                Err(e) => {
                    errors.push(format!("laser: {e}"));
                    None
                }
            }
        });
        let (time, coverage) = match (time, coverage) {
            (Ok(t), Ok(c)) => (t, c),
            (t, c) => {
                for e in [t.err(), c.err()].into_iter().flatten() {
                    errors.push(format!("time: {e}"));
                }
                return Err(Error::Config(errors));
            }
        };
        match packet {
            Some(packet) if errors.is_empty() => Ok(Scenario {
                units,
                packet,
                barriers,
                laser,
                time_user: time.0,
                time: time.1,
                coverage_user: coverage.0,
                coverage: coverage.1,
                observer: len(self.observer.x),
                validate: self.validate,
            }),
            _ => Err(Error::Config(errors)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BarrierEntry {
    pub user: BarrierConfig,
    /// solver units
    pub spec: BarrierSpec,
    pub oracle: Option<OracleConfig>,
}

#[derive(Debug, Clone, Copy)]
pub struct LaserEntry {
    pub spec: LaserSpec,
    pub mode: qkinetic::detection::DeconvolutionMode,
}

/// A validated configuration in solver units.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub units: UnitSystem,
    pub packet: WavePacket,
    pub barriers: Vec<BarrierEntry>,
    pub laser: Option<LaserEntry>,
    pub time_user: TimeGrid,
    pub time: TimeGrid,
    pub coverage_user: TimeGrid,
    pub coverage: TimeGrid,
    /// Observation point, solver units.
    pub observer: f64,
    pub validate: ValidateConfig,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig1_round_trips_through_toml() {
        let cfg = ScenarioConfig::fig1();
        let back = ScenarioConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, back);
        assert!(back.validate().is_ok());
    }

    #[test]
    fn shipped_file_is_the_default() {
        let text = include_str!("../../../configs/fig1.toml");
        assert_eq!(ScenarioConfig::from_toml(text).unwrap(), ScenarioConfig::fig1());
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = "[time]\nt_min = 0.0\nt_max = 1.0\nn_points = 3\nbogus = 1\n";
        assert!(matches!(ScenarioConfig::from_toml(text), Err(Error::Config(_))));
    }

    #[test]
    fn every_violation_listed() {
        let mut cfg = ScenarioConfig::fig1();
        cfg.barriers[0].height = 0.0;
        cfg.barriers[1].length = -1.0;
        cfg.time.n_points = 1;
        cfg.units.mass = -2.0;
        match cfg.validate() {
            Err(Error::Config(list)) => {
                assert!(list.len() >= 4, "{list:?}");
                assert!(list.iter().any(|m| m.contains("barrier[0].height")));
                assert!(list.iter().any(|m| m.contains("barrier[1].length")));
                assert!(list.iter().any(|m| m.contains("time.n_points")));
                assert!(list.iter().any(|m| m.contains("units.mass")));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn infinite_rabi_is_strong_limit() {
        let text = format!("{}\n", ScenarioConfig::fig1().to_toml()).replace("mode = \"fourier\"", "mode = \"fourier\"\nrabi = inf");
        let s = ScenarioConfig::from_toml(&text).unwrap().validate().unwrap();
        assert!(s.laser.unwrap().spec.rabi.is_none());
    }

    #[test]
    fn positivity_margin_reported() {
        let mut cfg = ScenarioConfig::fig1();
        cfg.packets[1].mean_velocity = 2.0;
        match cfg.validate() {
            Err(Error::Config(list)) => assert!(list.iter().any(|m| m.contains("packet[1]"))),
            other => panic!("unexpected {other:?}"),
        }
    }
}
