//! Scenario files, the stages behind each subcommand, and their CSV/SVG output.

pub mod config;
pub mod output;
pub mod scenario;

use std::path::Path;

use anyhow::{Context, Result};

pub use config::{Scenario, ScenarioConfig};
pub use scenario::Report;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Stage {
    Fig1,
    Densities,
    Absorb,
    Detect,
    Arrival,
    Validate,
}

/// Grid sizes given on the command line, applied over the file's values.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub grid_k: Option<usize>,
    pub grid_t: Option<usize>,
}

/// Reads `path`, or the built-in fig1 scenario when absent, and applies overrides.
pub fn load_config(path: Option<&Path>, overrides: Overrides) -> Result<ScenarioConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("stage config: reading {}", p.display()))?;
            ScenarioConfig::from_toml(&text).with_context(|| format!("stage config: parsing {}", p.display()))?
        }
        None => ScenarioConfig::fig1(),
    };
    if let Some(n) = overrides.grid_k {
        cfg.wavenumber.n_points = n;
    }
    if let Some(n) = overrides.grid_t {
        cfg.time.n_points = n;
    }
    Ok(cfg)
}

pub fn run_stage(stage: Stage, scenario: &Scenario, out: &Path) -> Result<Report> {
    match stage {
        Stage::Fig1 => scenario::run_fig1(scenario, out),
        Stage::Densities => scenario::run_densities(scenario, out),
        Stage::Absorb => scenario::run_absorb(scenario, out),
        Stage::Detect => scenario::run_detect(scenario, out),
        Stage::Arrival => scenario::run_arrival(scenario, out),
        Stage::Validate => scenario::run_validate(scenario, out),
    }
}
