use std::f64::consts::{LN_2, PI};
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use mbl_core::analysis::{fit_log_growth, local_minima, LogFit};
use mbl_core::hamiltonian::dense_spectrum;
use mbl_core::propagator::{evolve_on_grid, EvolveOptions, TimeGrid};
use mbl_core::runner::{
    self, realization_hamiltonian, strength_dir, table, write_series, EnsembleResult, ExperimentConfig, GridSpec,
};
use mbl_core::spectral::{detect_peaks, power_spectrum_of_series, two_spin_entropy};
use mbl_core::states::{hub_stats, product_state};
use mbl_core::{build_phenomenological_two_spin, entropy_record, Preset};

use crate::{AggregateArgs, ConfigFlags, FitArgs, HubcheckArgs, OracleArgs, RunArgs, SpectrumArgs};

pub fn build_config(flags: &ConfigFlags) -> Result<ExperimentConfig> {
    let mut cfg = match &flags.config {
        Some(path) => ExperimentConfig::load(path).with_context(|| format!("reading {}", path.display()))?,
        None => ExperimentConfig::default(),
    };
    let m = &mut cfg.model;
    if let Some(v) = &flags.model {
        m.kind = v.parse()?;
    }
    set(&mut m.chain_len, flags.chain_len);
    set(&mut m.delta, flags.delta);
    set(&mut m.hopping, flags.hopping);
    set(&mut m.v_int, flags.v_int);
    if let Some(v) = &flags.boundary {
        m.boundary = v.parse()?;
    }
    let d = &mut cfg.disorder;
    set(&mut d.strengths, flags.strengths.clone());
    set(&mut d.realizations, flags.realizations);
    set(&mut d.seed, flags.seed);
    if let Some(v) = &flags.state {
        cfg.initial.state = v.parse::<Preset>()?;
    }
    match flags.grid.as_deref() {
        None => {}
        Some("log") if !matches!(cfg.grid, GridSpec::Log { .. }) => cfg.grid = GridSpec::log_preset(),
        Some("uniform") if !matches!(cfg.grid, GridSpec::Uniform { .. }) => cfg.grid = GridSpec::uniform_preset(),
        Some("log" | "uniform") => {}
        Some(other) => bail!("unknown grid preset '{other}' (expected log or uniform)"),
    }
    match &mut cfg.grid {
        GridSpec::Log {
            t_min,
            t_max,
            points_per_decade,
        } => {
            if flags.dt.is_some() {
                bail!("--dt applies to the uniform grid only");
            }
            set(t_min, flags.t_min);
            set(t_max, flags.t_max);
            set(points_per_decade, flags.points_per_decade);
        }
        GridSpec::Uniform { dt, t_max } => {
            if flags.t_min.is_some() || flags.points_per_decade.is_some() {
                bail!("--t-min and --points-per-decade apply to the log grid only");
            }
            set(dt, flags.dt);
            set(t_max, flags.t_max);
        }
    }
    let p = &mut cfg.propagator;
    if let Some(v) = &flags.propagator {
        p.kind = v.parse()?;
    }
    set(&mut p.sector_blocked, flags.sector_blocked);
    set(&mut p.krylov.subspace_dim, flags.krylov_dim);
    set(&mut p.krylov.tolerance, flags.tolerance);
    set(&mut cfg.observables.half_chain, flags.half_chain);
    if flags.output.is_some() {
        cfg.output.dir = flags.output.clone();
    }
    set(&mut cfg.output.workers, flags.workers);
    cfg.validate()?;
    Ok(cfg)
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn unit(bits: bool) -> f64 {
    if bits {
        1.0 / LN_2
    } else {
        1.0
    }
}

#[derive(Serialize)]
struct SeriesSummary {
    #[serde(rename = "W")]
    w: f64,
    realizations: usize,
    failed: usize,
    t_final: f64,
    s_avg_final: f64,
    s_avg_err_final: f64,
    table: Option<String>,
}

#[derive(Serialize)]
struct Summary {
    config_hash: String,
    seed: u64,
    software_version: String,
    entropy_unit: &'static str,
    series: Vec<SeriesSummary>,
}

/// Writes `W_<w>/aggregate.csv` for every series (when `dir` is set) and
/// prints a JSON summary.
fn report(result: &EnsembleResult, dir: Option<&Path>, bits: bool) -> Result<()> {
    let u = unit(bits);
    let mut series = Vec::new();
    for s in &result.series {
        let table = match dir {
            Some(dir) => {
                let path = strength_dir(dir, s.w).join("aggregate.csv");
                std::fs::write(&path, write_series(s, u)).with_context(|| format!("writing {}", path.display()))?;
                Some(path.display().to_string())
            }
            None => None,
        };
        let (last, err) = (s.mean.last(), s.stderr.last());
        series.push(SeriesSummary {
            w: s.w,
            realizations: s.realizations,
            failed: s.failed,
            t_final: last.map_or(f64::NAN, |r| r.t),
            s_avg_final: last.map_or(f64::NAN, |r| u * r.average),
            s_avg_err_final: err.map_or(f64::NAN, |r| u * r.average),
            table,
        });
    }
    let summary = Summary {
        config_hash: result.config_hash.clone(),
        seed: result.seed,
        software_version: result.software_version.clone(),
        entropy_unit: if bits { "bits" } else { "nats" },
        series,
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

pub fn run(args: RunArgs) -> Result<()> {
    let cfg = build_config(&args.config)?;
    if args.dry_run {
        print!("{}", cfg.to_toml());
        return Ok(());
    }
    let result = runner::run_experiment(&cfg)?;
    report(&result, cfg.output.dir.as_deref(), args.bits)
}

pub fn aggregate(args: AggregateArgs) -> Result<()> {
    let result = runner::aggregate(&args.dir).with_context(|| format!("aggregating {}", args.dir.display()))?;
    report(&result, Some(&args.dir), args.bits)
}

fn read_series(input: &Path, column: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let text = std::fs::read_to_string(input).with_context(|| format!("reading {}", input.display()))?;
    Ok((table::read_column(&text, "t")?, table::read_column(&text, column)?))
}

#[derive(Serialize)]
struct PeakSummary {
    omega: f64,
    height: f64,
}

#[derive(Serialize)]
struct SpectrumSummary {
    samples: usize,
    dt: f64,
    bin_width: f64,
    nyquist: f64,
    threshold: f64,
    /// Tallest first.
    peaks: Vec<PeakSummary>,
}

pub fn spectrum(args: SpectrumArgs) -> Result<()> {
    let (t, v) = read_series(&args.series.input, &args.series.column)?;
    let spectrum = power_spectrum_of_series(&t, &v)?;
    let peaks = detect_peaks(&spectrum, args.threshold)?;
    if let Some(out) = &args.output {
        std::fs::write(out, table::write_spectrum(&spectrum)).with_context(|| format!("writing {}", out.display()))?;
    }
    let summary = SpectrumSummary {
        samples: spectrum.samples,
        dt: spectrum.dt,
        bin_width: spectrum.bin_width(),
        nyquist: spectrum.nyquist(),
        threshold: peaks.threshold,
        peaks: peaks
            .tallest()
            .into_iter()
            .map(|p| PeakSummary {
                omega: p.omega,
                height: p.height,
            })
            .collect(),
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

#[derive(Serialize)]
struct FitReport {
    column: String,
    window: usize,
    t_min: f64,
    t_max: Option<f64>,
    minima_found: usize,
    slope_stderr: f64,
    fit: LogFit,
}

pub fn fit(args: FitArgs) -> Result<()> {
    let (t, v) = read_series(&args.series.input, &args.series.column)?;
    let series: Vec<(f64, f64)> = t.into_iter().zip(v).collect();
    let minima = local_minima(&series, args.window)?;
    let found = minima.len();
    let windowed: Vec<(f64, f64)> = minima
        .into_iter()
        .filter(|&(t, _)| args.t_max.is_none_or(|hi| t <= hi))
        .collect();
    let fit = fit_log_growth(&windowed, args.t_min, args.scale)?;
    let report = FitReport {
        column: args.series.column,
        window: args.window,
        t_min: args.t_min,
        t_max: args.t_max,
        minima_found: found,
        slope_stderr: fit.slope_stderr(),
        fit,
    };
    let text = serde_json::to_string_pretty(&report)? + "\n";
    match &args.output {
        Some(out) => std::fs::write(out, &text).with_context(|| format!("writing {}", out.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct HubSummary {
    #[serde(rename = "W")]
    w: f64,
    state: String,
    realizations: usize,
    dim: usize,
    /// Disorder-averaged participation entropy over `ln D`.
    normalized_entropy: f64,
    normalized_entropy_err: f64,
    /// Extremes of `D·|⟨E|ψ⟩|²` over all realizations.
    min_scaled_overlap: f64,
    max_scaled_overlap: f64,
}

pub fn hubcheck(args: HubcheckArgs) -> Result<()> {
    let cfg = build_config(&args.config)?;
    let psi = product_state(&cfg.initial.state.expand(cfg.chain_len()))?;
    let mut out = Vec::new();
    for &w in &cfg.disorder.strengths {
        let mut values = Vec::new();
        let (mut lo, mut hi, mut dim) = (f64::INFINITY, 0.0f64, 0);
        for r in 0..cfg.disorder.realizations as u64 {
            let (h, _) = realization_hamiltonian(&cfg, w, r)?;
            let stats = hub_stats(&psi, &dense_spectrum(&h)?)?;
            values.push(stats.normalized_entropy());
            lo = lo.min(stats.min);
            hi = hi.max(stats.max);
            dim = stats.dim;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let err = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) / n).sqrt()
        } else {
            0.0
        };
        out.push(HubSummary {
            w,
            state: cfg.initial.state.to_string(),
            realizations: values.len(),
            dim,
            normalized_entropy: mean,
            normalized_entropy_err: err,
            min_scaled_overlap: lo,
            max_scaled_overlap: hi,
        });
    }
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

#[derive(Serialize)]
struct OracleSummary {
    v_int: f64,
    points: usize,
    max_abs_error: f64,
    tolerance: f64,
    pass: bool,
}

pub fn oracle(args: OracleArgs) -> Result<()> {
    let h = build_phenomenological_two_spin(args.v_int);
    let psi0 = product_state(&Preset::NeelX.expand(2))?;
    let grid = TimeGrid::uniform(args.dt, args.t_max.unwrap_or(8.0 * PI))?;
    let mut csv = String::from("t,S_1,S_2,closed_form\n");
    let mut worst: f64 = 0.0;
    evolve_on_grid(&h, &psi0, &grid, &EvolveOptions::default(), |t, psi| {
        let rec = entropy_record(psi, t, false)?;
        let exact = two_spin_entropy(args.v_int, t);
        for s in &rec.site_entropies {
            worst = worst.max((s - exact).abs());
        }
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            table::fmt_f64(t),
            table::fmt_f64(rec.site_entropies[0]),
            table::fmt_f64(rec.site_entropies[1]),
            table::fmt_f64(exact)
        );
        Ok(())
    })?;
    if let Some(out) = &args.output {
        std::fs::write(out, csv).with_context(|| format!("writing {}", out.display()))?;
    }
    let summary = OracleSummary {
        v_int: args.v_int,
        points: grid.len(),
        max_abs_error: worst,
        tolerance: args.tolerance,
        pass: worst <= args.tolerance,
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    if !summary.pass {
        bail!("two-spin trajectory deviates from the closed form by {worst:.3e}");
    }
    Ok(())
}
