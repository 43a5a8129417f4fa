use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use qkinetic_cli::{load_config, run_stage, Overrides, ScenarioConfig, Stage};

#[derive(Parser)]
#[command(name = "qkinetic", version, about = "Kinetic-energy densities, absorption rates and arrival times of free wave packets")]
struct Cli {
    /// Scenario file (TOML); the built-in fig1 scenario when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, env = "QKINETIC_OUT")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Wavenumber grid points
    #[arg(long = "grid-k", global = true)]
    grid_k: Option<usize>,
    /// Time grid points
    #[arg(long = "grid-t", global = true)]
    grid_t: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Densities and scaled absorption rates on the fig1 window, plus a plot
    Fig1,
    /// ρ, J, τ1, τ2, τ3 and Δ at the observer
    Densities,
    /// Closed-form absorption rates for every barrier
    Absorb,
    /// Finite-γ detection rate and its deconvolution
    Detect,
    /// Kijowski distribution and its expansion
    Arrival,
    /// Split-step cross-checks of the closed-form rates
    Validate,
    /// Print the default scenario file
    DefaultConfig,
}

fn run(cli: Cli) -> Result<usize> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let stage = match cli.command {
        Command::DefaultConfig => {
            print!("{}", ScenarioConfig::fig1().to_toml());
            return Ok(0);
        }
        Command::Fig1 => Stage::Fig1,
        Command::Densities => Stage::Densities,
        Command::Absorb => Stage::Absorb,
        Command::Detect => Stage::Detect,
        Command::Arrival => Stage::Arrival,
        Command::Validate => Stage::Validate,
    };
    let overrides = Overrides {
        grid_k: cli.grid_k,
        grid_t: cli.grid_t,
    };
    let cfg = load_config(cli.config.as_deref(), overrides)?;
    let scenario = cfg.validate().context("stage config")?;
    let out = cli.out.or(cfg.out_dir).unwrap_or_else(|| PathBuf::from("out"));
    let report = run_stage(stage, &scenario, &out)?;
    for line in &report.lines {
        println!("{line}");
    }
    for f in &report.files {
        println!("wrote {}", f.display());
    }
    Ok(report.failures)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(n) => {
            eprintln!("{n} check(s) failed");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
