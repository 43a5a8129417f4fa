//! The stages behind each subcommand. Every stage writes its files into the
//! output directory and returns a short report.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use qkinetic::absorber::{absorbed_fraction, detection_rate, large_v_rate, large_v_total, normalized_rate};
use qkinetic::arrival::expansion_report;
use qkinetic::detection::{deconvolve, finite_gamma_rate, DeconvolutionMode};
use qkinetic::ked::{density_series, time_sum_rules};
use qkinetic::oracle::{norm_loss_rate, oracle_rate, propagate, OracleConfig, OracleRun};
use qkinetic::{trapezoid_integral, Dimension, TimeSeries};
use rayon::prelude::*;

use crate::config::{BarrierEntry, Scenario};
use crate::output::{line_plot, write_csv, Series};

/// Relative sup-norm tolerance between the closed-form and split-step rates.
pub const ORACLE_EQUIVALENCE: f64 = 1e-3;
/// Relative tolerance of −dN/dt = 2V × occupancy at the peak.
pub const NORM_RATE_IDENTITY: f64 = 1e-4;
/// Absolute tolerance of ∫Π dt = N(t_min) − N(t_max).
pub const BOOKKEEPING: f64 = 1e-4;
pub const CONVERGENCE_RATIO: (f64, f64) = (3.4, 4.6);

#[derive(Debug, Default)]
pub struct Report {
    pub files: Vec<PathBuf>,
    pub lines: Vec<String>,
    pub failures: usize,
}

impl Report {
    fn line(&mut self, s: impl Into<String>) {
        self.lines.push(s.into());
    }

    fn check(&mut self, name: &str, ok: bool, detail: String) {
        if !ok {
            self.failures += 1;
        }
        self.lines.push(format!("{} {name}: {detail}", if ok { "PASS" } else { "FAIL" }));
    }

    fn write_summary(&mut self, out: &Path, name: &str) -> Result<()> {
        let path = out.join(name);
        fs::write(&path, self.lines.join("\n") + "\n").with_context(|| format!("writing {}", path.display()))?;
        self.files.push(path);
        Ok(())
    }
}

fn prepare(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating output directory {}", out.display()))
}

fn user(s: &Scenario, series: &TimeSeries, dim: Dimension) -> Vec<f64> {
    series.values.iter().map(|&v| s.units.to_user(v, dim)).collect()
}

/// Densities at the observer over the main time window, the scaled normalized
/// rate for every barrier, a plot and the sum-rule summary.
pub fn run_fig1(s: &Scenario, out: &Path) -> Result<Report> {
    prepare(out)?;
    let mut report = Report::default();
    let d = density_series(&s.packet, s.observer, s.time).context("stage fig1: densities")?;
    let half_p0 = 0.5 * s.packet.p0();
    let pins: Vec<TimeSeries> = s
        .barriers
        .par_iter()
        .enumerate()
        .map(|(i, b)| {
            let rate = detection_rate(&s.packet, &b.spec, &s.time)
                .with_context(|| format!("stage fig1: detection_rate for barrier {}", i + 1))?;
            Ok(normalized_rate(&rate)
                .with_context(|| format!("stage fig1: normalizing barrier {}", i + 1))?
                .scaled(half_p0))
        })
        .collect::<Result<_>>()?;

    let t = s.time_user.points();
    let columns: Vec<Vec<f64>> = [&d.tau1, &d.tau2, &d.tau3]
        .into_iter()
        .chain(pins.iter())
        .map(|series| user(s, series, Dimension::EnergyDensity))
        .collect();
    let names: Vec<String> = (1..=pins.len()).map(|i| format!("pin_scaled_v{i}")).collect();
    let mut header = vec!["t_us", "tau1", "tau2", "tau3"];
    header.extend(names.iter().map(String::as_str));
    let mut cols: Vec<&[f64]> = vec![&t];
    cols.extend(columns.iter().map(Vec::as_slice));
    let csv = out.join("fig1.csv");
    write_csv(&csv, &header, &cols).context("stage fig1: writing fig1.csv")?;
    report.files.push(csv);

    const COLORS: [&str; 8] = ["black", "#d62728", "#2ca02c", "#1f77b4", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2"];
    let labels: Vec<String> = ["τ1".to_string(), "τ2".into(), "τ3".into()]
        .into_iter()
        .chain(s.barriers.iter().map(|b| format!("p0 Π_N/2, V = {} ħ/μs", b.user.height)))
        .collect();
    let series: Vec<Series> = columns
        .iter()
        .zip(&labels)
        .zip(COLORS.iter().cycle())
        .map(|((c, l), color)| Series { label: l, values: c, color })
        .collect();
    let svg = line_plot(
        &format!("Kinetic energy densities at x = {} μm", s.units.to_user(s.observer, Dimension::Length)),
        "t (μs)",
        "ħ/(μs·μm)",
        &t,
        &series,
    );
    let svg_path = out.join("fig1.svg");
    match fs::write(&svg_path, svg) {
        Ok(()) => report.files.push(svg_path),
        Err(e) => {
            let msg = format!("warning: plot not written ({e}); fig1.csv is complete");
            eprintln!("{msg}");
            report.line(msg);
        }
    }

    let p0 = s.packet.p0();
    report.line(format!(
        "p0 = {:.6e} kg m/s (k0 = {:.6} per solver length, v0 = {:.4} cm/s)",
        s.units.to_user(p0, Dimension::Momentum),
        p0,
        s.units.to_user(s.packet.v0(), Dimension::Velocity)
    ));
    let window = |x: &TimeSeries| trapezoid_integral(x).unwrap_or(f64::NAN);
    report.line(format!(
        "window [{}, {}] us: ∫τ1 dt / (p0/2) = {:.6}, ∫Δ dt / ∫τ1 dt = {:.3e} (window need not cover the passage)",
        s.time_user.t_min(),
        s.time_user.t_max(),
        window(&d.tau1) / half_p0,
        window(&d.delta) / window(&d.tau1)
    ));
    match time_sum_rules(&s.packet, s.observer, s.coverage) {
        Ok(r) => report.line(format!(
            "coverage window [{}, {}] us: ∫τ1 dt / (p0/2) = {:.6}, ∫Δ dt / ∫τ1 dt = {:.3e}, ∫J dt = {:.6}",
            s.coverage_user.t_min(),
            s.coverage_user.t_max(),
            r.tau1_integral / half_p0,
            r.delta_integral / r.tau1_integral,
            r.flux_integral
        )),
        Err(e) => report.line(format!("coverage window sum rules unavailable: {e}")),
    }
    let peak = d.tau1.peak();
    let min_tau2 = d.tau2.values.iter().copied().fold(f64::INFINITY, f64::min);
    report.line(format!("min τ2 / peak τ1 = {:.4e}", min_tau2 / peak));
    for (b, pin) in s.barriers.iter().zip(&pins) {
        report.line(format!(
            "V = {} hbar/us, L = {} um: sup |p0 Π_N/2 − τ1| / peak τ1 = {:.4e}",
            b.user.height,
            b.user.length,
            pin.sup_distance(&d.tau1, &d.tau1)
        ));
    }
    report.write_summary(out, "fig1_summary.txt")?;
    Ok(report)
}

/// Every density at the observer on the main time grid.
pub fn run_densities(s: &Scenario, out: &Path) -> Result<Report> {
    prepare(out)?;
    let mut report = Report::default();
    let d = density_series(&s.packet, s.observer, s.time).context("stage densities")?;
    let t = s.time_user.points();
    let ed = |x: &TimeSeries| user(s, x, Dimension::EnergyDensity);
    let cols = [
        user(s, &d.rho, Dimension::ProbabilityDensity),
        user(s, &d.flux, Dimension::Rate),
        ed(&d.tau1),
        ed(&d.tau2),
        ed(&d.tau3),
        ed(&d.delta),
    ];
    let path = out.join("densities.csv");
    let mut all: Vec<&[f64]> = vec![&t];
    all.extend(cols.iter().map(Vec::as_slice));
    write_csv(
        &path,
        &[
            "t_us",
            "rho_per_um",
            "flux_per_us",
            "tau1_hbar_per_us_um",
            "tau2_hbar_per_us_um",
            "tau3_hbar_per_us_um",
            "delta_hbar_per_us_um",
        ],
        &all,
    )
    .context("stage densities: writing densities.csv")?;
    report.files.push(path);
    report.line(format!("{} samples at x = {} um", t.len(), s.units.to_user(s.observer, Dimension::Length)));
    report.write_summary(out, "densities_summary.txt")?;
    Ok(report)
}

/// Π, Π_N and the large-V limit for every barrier entry.
pub fn run_absorb(s: &Scenario, out: &Path) -> Result<Report> {
    prepare(out)?;
    anyhow::ensure!(!s.barriers.is_empty(), "stage absorb: no [[barrier]] entries");
    let results: Vec<(TimeSeries, TimeSeries, TimeSeries, f64)> = s
        .barriers
        .par_iter()
        .enumerate()
        .map(|(i, b)| {
            let stage = || format!("stage absorb: barrier {}", i + 1);
            let rate = detection_rate(&s.packet, &b.spec, &s.time).with_context(stage)?;
            let pin = normalized_rate(&rate).with_context(stage)?;
            let limit = large_v_rate(&s.packet, b.spec.offset, &s.time).with_context(stage)?;
            let total = absorbed_fraction(&s.packet, &b.spec).with_context(stage)?;
            Ok((rate, pin, limit, total))
        })
        .collect::<Result<_>>()?;
    let mut report = Report::default();
    let t = s.time_user.points();
    for (i, (b, (rate, pin, limit, total))) in s.barriers.iter().zip(&results).enumerate() {
        let path = out.join(format!("absorb_v{}.csv", i + 1));
        let cols = [user(s, rate, Dimension::Rate), user(s, pin, Dimension::Rate), user(s, limit, Dimension::Rate)];
        write_csv(
            &path,
            &["t_us", "pi_per_us", "pin_per_us", "large_v_per_us"],
            &[&t, &cols[0], &cols[1], &cols[2]],
        )
        .with_context(|| format!("stage absorb: writing {}", path.display()))?;
        report.files.push(path);
        report.line(format!(
            "barrier {}: V = {} hbar/us, L = {} um, offset = {} um: absorbed {:.6} (window {:.6}), large-V estimate {:.6}, sup |Π_N − limit| / peak = {:.4e}",
            i + 1,
            b.user.height,
            b.user.length,
            b.user.offset,
            total,
            trapezoid_integral(rate).unwrap_or(f64::NAN),
            large_v_total(&s.packet, b.spec.height),
            pin.sup_distance(limit, limit)
        ));
    }
    report.write_summary(out, "absorb_summary.txt")?;
    Ok(report)
}

/// Finite-γ rate at the observer and its deconvolution, on the coverage grid.
pub fn run_detect(s: &Scenario, out: &Path) -> Result<Report> {
    prepare(out)?;
    let laser = s.laser.context("stage detect: no [laser] section")?;
    let local = s.packet.shifted(-s.observer);
    let grid = s.coverage;
    let measured = finite_gamma_rate(&local, &laser.spec, &grid).context("stage detect: finite_gamma_rate")?;
    let primary = deconvolve(&measured, &laser.spec, laser.mode).context("stage detect: deconvolve")?;
    let other_mode = match laser.mode {
        DeconvolutionMode::Fourier => DeconvolutionMode::TimeDomain,
        DeconvolutionMode::TimeDomain => DeconvolutionMode::Fourier,
    };
    let secondary = deconvolve(&measured, &laser.spec, other_mode).ok();
    let limit = large_v_rate(&s.packet, s.observer, &grid).context("stage detect: large_v_rate")?;

    let mut report = Report::default();
    let t = s.coverage_user.points();
    let fourier_first = laser.mode == DeconvolutionMode::Fourier;
    let (fourier, timedomain) = if fourier_first {
        (Some(&primary), secondary.as_ref())
    } else {
        (secondary.as_ref(), Some(&primary))
    };
    let mut header = vec!["t_us", "finite_gamma_per_us"];
    let mut cols = vec![user(s, &measured, Dimension::Rate)];
    if let Some(f) = fourier {
        header.push("deconvolved_fourier_per_us");
        cols.push(user(s, f, Dimension::Rate));
    }
    if let Some(td) = timedomain {
        header.push("deconvolved_timedomain_per_us");
        cols.push(user(s, td, Dimension::Rate));
    }
    header.push("large_v_per_us");
    cols.push(user(s, &limit, Dimension::Rate));
    let mut all: Vec<&[f64]> = vec![&t];
    all.extend(cols.iter().map(Vec::as_slice));
    let path = out.join("detect.csv");
    write_csv(&path, &header, &all).context("stage detect: writing detect.csv")?;
    report.files.push(path);

    report.line(format!(
        "gamma = {} /us, low saturation (γ > 10 ⟨k²⟩/2): {}",
        s.units.to_user(laser.spec.gamma, Dimension::Rate),
        laser.spec.low_saturation(&s.packet, 10.0)
    ));
    report.line(format!("sup |deconvolved − large-V| / peak = {:.4e}", primary.sup_distance(&limit, &limit)));
    match (fourier, timedomain) {
        (Some(f), Some(td)) => report.line(format!("sup |fourier − timedomain| / peak = {:.4e}", f.sup_distance(td, f))),
        _ => report.line("time-domain mode needs the strong-driving limit; only the Fourier result is written"),
    }
    report.write_summary(out, "detect_summary.txt")?;
    Ok(report)
}

/// Kijowski's distribution and its expansion orders on the coverage grid.
pub fn run_arrival(s: &Scenario, out: &Path) -> Result<Report> {
    prepare(out)?;
    let r = expansion_report(&s.packet, s.observer, &s.coverage).context("stage arrival")?;
    let t = s.coverage_user.points();
    let cols = [&r.kijowski, &r.order0, &r.order1, &r.order2].map(|x| user(s, x, Dimension::Rate));
    let path = out.join("arrival.csv");
    write_csv(
        &path,
        &["t_us", "kijowski_per_us", "order0_per_us", "order1_per_us", "order2_per_us"],
        &[&t, &cols[0], &cols[1], &cols[2], &cols[3]],
    )
    .context("stage arrival: writing arrival.csv")?;
    let mut report = Report::default();
    report.files.push(path);
    report.line(format!("∫Π_K dt = {:.8}", trapezoid_integral(&r.kijowski).unwrap_or(f64::NAN)));
    let [d0, d1, d2] = r.sup_distances;
    report.line(format!("sup distances from Π_K: order0 {d0:.4e}, order1 {d1:.4e}, order2 {d2:.4e}"));
    report.write_summary(out, "arrival_summary.txt")?;
    Ok(report)
}

/// Outcome of the split-step cross-checks for one barrier.
#[derive(Debug, Clone)]
pub struct OracleCheck {
    pub barrier: usize,
    pub run: OracleRun,
    pub closed_form: TimeSeries,
}

impl OracleCheck {
    pub fn equivalence(&self) -> f64 {
        oracle_rate(&self.run).sup_distance(&self.closed_form, &self.closed_form)
    }

    /// Relative mismatch of −dN/dt and 2V × occupancy at the rate's peak.
    pub fn norm_rate_identity(&self) -> f64 {
        let rate = oracle_rate(&self.run);
        let loss = norm_loss_rate(&self.run);
        let i = (0..rate.len())
            .max_by(|&a, &b| rate.values[a].total_cmp(&rate.values[b]))
            .unwrap_or(0);
        (loss.values[i] - rate.values[i]).abs() / rate.values[i]
    }

    /// |∫Π dt − (N(t_min) − N(t_max))|
    pub fn bookkeeping(&self) -> f64 {
        let s = &self.run.samples;
        let lost = s[0].norm - s[s.len() - 1].norm;
        (trapezoid_integral(&oracle_rate(&self.run)).unwrap_or(f64::NAN) - lost).abs()
    }

    pub fn monotone(&self) -> bool {
        self.run.samples.windows(2).all(|w| w[1].norm <= w[0].norm + 1e-12)
    }
}

pub fn oracle_check(s: &Scenario, index: usize) -> Result<OracleCheck> {
    let b: &BarrierEntry = &s.barriers[index];
    let cfg = b
        .oracle
        .with_context(|| format!("stage validate: barrier {} has no [barrier.oracle] settings", index + 1))?;
    let stage = || format!("stage validate: barrier {}", index + 1);
    let closed_form = detection_rate(&s.packet, &b.spec, &s.time).with_context(stage)?;
    let run = propagate(&s.packet, Some(&b.spec), &cfg, &s.time).with_context(stage)?;
    Ok(OracleCheck {
        barrier: index,
        run,
        closed_form,
    })
}

/// Sup-norm defects of Π between dt and dt/2 and between dt/2 and dt/4,
/// both relative to the dt/4 run, and their ratio.
pub fn dt_convergence(s: &Scenario, index: usize, base: OracleConfig) -> Result<(f64, f64, f64)> {
    let b = &s.barriers[index];
    let runs: Vec<TimeSeries> = [1.0, 0.5, 0.25]
        .par_iter()
        .map(|f| {
            let cfg = OracleConfig { dt: base.dt * f, ..base };
            propagate(&s.packet, Some(&b.spec), &cfg, &s.time)
                .map(|r| oracle_rate(&r))
                .context("stage validate: dt convergence")
        })
        .collect::<Result<_>>()?;
    let coarse = runs[0].sup_distance(&runs[1], &runs[2]);
    let fine = runs[1].sup_distance(&runs[2], &runs[2]);
    Ok((coarse, fine, coarse / fine))
}

/// Split-step oracle against the closed form, with the oracle's own invariants.
pub fn run_validate(s: &Scenario, out: &Path) -> Result<Report> {
    prepare(out)?;
    let indices: Vec<usize> = (0..s.barriers.len()).filter(|&i| s.barriers[i].oracle.is_some()).collect();
    anyhow::ensure!(!indices.is_empty(), "stage validate: no barrier has [barrier.oracle] settings");
    let checks: Vec<OracleCheck> = indices.par_iter().map(|&i| oracle_check(s, i)).collect::<Result<_>>()?;
    let mut report = Report::default();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut header: Vec<String> = vec!["t_us".into()];
    for c in &checks {
        let b = &s.barriers[c.barrier];
        let tag = format!("barrier {} (V = {} hbar/us, L = {} um)", c.barrier + 1, b.user.height, b.user.length);
        let eq = c.equivalence();
        report.check(&format!("{tag} closed form vs split-step"), eq < ORACLE_EQUIVALENCE, format!("sup {eq:.3e} < {ORACLE_EQUIVALENCE:e}"));
        let id = c.norm_rate_identity();
        report.check(&format!("{tag} -dN/dt = 2V occupancy at peak"), id < NORM_RATE_IDENTITY, format!("{id:.3e} < {NORM_RATE_IDENTITY:e}"));
        let bk = c.bookkeeping();
        report.check(&format!("{tag} ∫Π dt = N(t_min) − N(t_max)"), bk < BOOKKEEPING, format!("{bk:.3e} < {BOOKKEEPING:e}"));
        report.check(&format!("{tag} monotone norm"), c.monotone(), "norm never increases".into());
        let i = c.barrier + 1;
        header.push(format!("closed_form_v{i}_per_us"));
        header.push(format!("split_step_v{i}_per_us"));
        rows.push(user(s, &c.closed_form, Dimension::Rate));
        rows.push(user(s, &oracle_rate(&c.run), Dimension::Rate));
    }
    let v = s.validate;
    let base = s.barriers[v.convergence_barrier]
        .oracle
        .with_context(|| format!("stage validate: barrier {} has no oracle settings", v.convergence_barrier + 1))?;
    let base = OracleConfig {
        n_x: v.convergence_n_x,
        dt: s.units.to_solver(v.convergence_dt, Dimension::Time),
        ..base
    };
    let (coarse, fine, ratio) = dt_convergence(s, v.convergence_barrier, base)?;
    let (lo, hi) = CONVERGENCE_RATIO;
    report.check(
        &format!("order-2 dt convergence (barrier {}, n_x = {}, dt = {} us)", v.convergence_barrier + 1, v.convergence_n_x, v.convergence_dt),
        (lo..=hi).contains(&ratio),
        format!("defects {coarse:.3e} / {fine:.3e} = {ratio:.3} in [{lo}, {hi}]"),
    );

    let t = s.time_user.points();
    let mut all: Vec<&[f64]> = vec![&t];
    all.extend(rows.iter().map(Vec::as_slice));
    let names: Vec<&str> = header.iter().map(String::as_str).collect();
    let path = out.join("validate.csv");
    write_csv(&path, &names, &all).context("stage validate: writing validate.csv")?;
    report.files.push(path);
    report.write_summary(out, "validate_report.txt")?;
    Ok(report)
}
