//! Physical constants and the map between user units and solver units.
//!
//! User units are the laboratory ones: lengths in μm, times in μs, masses in
//! kg, velocities in cm/s, energies in ℏ/μs, momenta in kg·m/s. Inside the
//! solvers ℏ = m = 1, so a single scale (the length unit or the time unit)
//! fixes everything else through `time_unit = mass · length_unit² / ħ`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// CODATA 2018 value of ħ in J·s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;

/// ħ in kg·μm²/μs (1 J·s = 10⁶ kg·μm²/μs).
pub const HBAR_LAB: f64 = HBAR_SI * 1.0e6;

/// Caesium-133 atomic mass as quoted for the two-packet scenario, kg.
pub const CAESIUM_MASS: f64 = 2.2e-25;

/// 1 cm/s expressed in μm/μs.
const CM_PER_S: f64 = 1.0e-2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dimension {
    /// μm
    Length,
    /// μs
    Time,
    /// kg
    Mass,
    /// cm/s
    Velocity,
    /// 1/μm
    Wavenumber,
    /// ħ/μs
    Energy,
    /// 1/μs
    Rate,
    /// kg·m/s (identical to kg·μm/μs)
    Momentum,
    /// (ħ/μs)/μm
    EnergyDensity,
    /// 1/μm
    ProbabilityDensity,
}

impl Dimension {
    pub const ALL: [Dimension; 10] = [
        Dimension::Length,
        Dimension::Time,
        Dimension::Mass,
        Dimension::Velocity,
        Dimension::Wavenumber,
        Dimension::Energy,
        Dimension::Rate,
        Dimension::Momentum,
        Dimension::EnergyDensity,
        Dimension::ProbabilityDensity,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Dimension::Length => "length",
            Dimension::Time => "time",
            Dimension::Mass => "mass",
            Dimension::Velocity => "velocity",
            Dimension::Wavenumber => "wavenumber",
            Dimension::Energy => "energy",
            Dimension::Rate => "rate",
            Dimension::Momentum => "momentum",
            Dimension::EnergyDensity => "energy_density",
            Dimension::ProbabilityDensity => "probability_density",
        }
    }

    /// Unit label used in CSV headers.
    pub fn user_unit(self) -> &'static str {
        match self {
            Dimension::Length => "um",
            Dimension::Time => "us",
            Dimension::Mass => "kg",
            Dimension::Velocity => "cm/s",
            Dimension::Wavenumber => "1/um",
            Dimension::Energy => "hbar/us",
            Dimension::Rate => "1/us",
            Dimension::Momentum => "kg*m/s",
            Dimension::EnergyDensity => "hbar/(us*um)",
            Dimension::ProbabilityDensity => "1/um",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Dimension {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Dimension::ALL
            .into_iter()
            .find(|d| d.tag() == s)
            .ok_or_else(|| Error::UnknownDimension(s.to_owned()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSystem {
    /// ħ in kg·μm²/μs.
    pub hbar: f64,
    /// Particle mass in kg.
    pub mass: f64,
    /// Solver length unit, in μm.
    pub length_unit: f64,
    /// Solver time unit, in μs.
    pub time_unit: f64,
}

impl UnitSystem {
    /// Unit system whose solver length unit is `length_unit` μm.
    pub fn with_length_unit(hbar: f64, mass: f64, length_unit: f64) -> Result<Self> {
        check_positive("hbar", hbar)?;
        check_positive("mass", mass)?;
        check_positive("length_unit", length_unit)?;
        Ok(UnitSystem {
            hbar,
            mass,
            length_unit,
            time_unit: mass * length_unit * length_unit / hbar,
        })
    }

    /// Unit system whose solver time unit is `time_unit` μs.
    pub fn with_time_unit(hbar: f64, mass: f64, time_unit: f64) -> Result<Self> {
        check_positive("hbar", hbar)?;
        check_positive("mass", mass)?;
        check_positive("time_unit", time_unit)?;
        Ok(UnitSystem {
            hbar,
            mass,
            length_unit: (hbar * time_unit / mass).sqrt(),
            time_unit,
        })
    }

    /// Caesium atom with CODATA ħ; one solver time unit is 1 μs.
    pub fn caesium() -> Self {
        Self::with_time_unit(HBAR_LAB, CAESIUM_MASS, 1.0).expect("constants are positive")
    }

    /// Multiplier taking a user-unit value to solver units.
    pub fn factor(&self, dim: Dimension) -> f64 {
        let (l, t) = (self.length_unit, self.time_unit);
        match dim {
            Dimension::Length => 1.0 / l,
            Dimension::Time => 1.0 / t,
            Dimension::Mass => 1.0 / self.mass,
            Dimension::Velocity => CM_PER_S * t / l,
            Dimension::Wavenumber => l,
            Dimension::Energy => t,
            Dimension::Rate => t,
            Dimension::Momentum => l / self.hbar,
            Dimension::EnergyDensity => t * l,
            Dimension::ProbabilityDensity => l,
        }
    }

    pub fn to_solver(&self, value: f64, dim: Dimension) -> f64 {
        value * self.factor(dim)
    }

    pub fn to_user(&self, value: f64, dim: Dimension) -> f64 {
        value / self.factor(dim)
    }

    /// String-tagged conversion, for config-driven callers.
    pub fn to_solver_units(&self, value: f64, dimension: &str) -> Result<f64> {
        Ok(self.to_solver(value, dimension.parse()?))
    }
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self::caesium()
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and > 0, got {value}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn identity_length_scale() {
        let u = UnitSystem::with_length_unit(HBAR_LAB, CAESIUM_MASS, 1.0).unwrap();
        assert_eq!(u.to_solver(1.0, Dimension::Length), 1.0);
    }

    #[test]
    fn velocity_maps_to_wavenumber() {
        // k = m v / ħ, computed independently in SI.
        let u = UnitSystem::caesium();
        let v_si = 0.1896;
        let k_si = CAESIUM_MASS * v_si / HBAR_SI; // 1/m
        let k_solver = k_si * 1.0e-6 * u.length_unit; // 1/m -> 1/μm -> solver
        assert_relative_eq!(
            u.to_solver(18.96, Dimension::Velocity),
            k_solver,
            max_relative = 1e-12
        );
        // 395.53 /μm for the fast reference packet
        assert_relative_eq!(
            u.to_user(u.to_solver(18.96, Dimension::Velocity), Dimension::Wavenumber),
            395.534_939_656,
            max_relative = 1e-9
        );
    }

    #[test]
    fn momentum_round_trip() {
        let u = UnitSystem::caesium();
        let p0 = 2.67e-26;
        let back = u.to_user(u.to_solver(p0, Dimension::Momentum), Dimension::Momentum);
        assert_relative_eq!(back, p0, max_relative = 1e-12);
    }

    #[test]
    fn time_unit_is_consistent() {
        let u = UnitSystem::with_length_unit(HBAR_LAB, CAESIUM_MASS, 1.0).unwrap();
        let v = UnitSystem::with_time_unit(HBAR_LAB, CAESIUM_MASS, u.time_unit).unwrap();
        assert_relative_eq!(v.length_unit, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn unknown_tag() {
        let u = UnitSystem::caesium();
        assert_eq!(
            u.to_solver_units(1.0, "force"),
            Err(Error::UnknownDimension("force".into()))
        );
        assert!(u.to_solver_units(1.0, "rate").is_ok());
    }

    #[test]
    fn rejects_nonpositive_constants() {
        assert!(UnitSystem::with_length_unit(0.0, 1.0, 1.0).is_err());
        assert!(UnitSystem::with_time_unit(1.0, -1.0, 1.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn round_trip(value in -1e30f64..1e30, idx in 0usize..10, scale in 1e-3f64..1e3) {
            let u = UnitSystem::with_time_unit(HBAR_LAB, CAESIUM_MASS, scale).unwrap();
            let d = Dimension::ALL[idx];
            let back = u.to_user(u.to_solver(value, d), d);
            prop_assert!((back - value).abs() <= 1e-12 * value.abs());
        }
    }
}
