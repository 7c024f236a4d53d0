//! `mbl`: run disorder sweeps and analyse entropy series.

mod commands;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "mbl", version, about = "Local entanglement dynamics of the disordered XXZ chain")]
struct Cli {
    /// Log verbosity (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "info", env = "MBL_LOG")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run a disorder sweep and write per-realization files plus averages.
    Run(RunArgs),
    /// Recompute the averages of a results directory.
    Aggregate(AggregateArgs),
    /// Power spectrum and peaks of one column of a CSV time series.
    Spectrum(SpectrumArgs),
    /// Logarithmic fit to the local minima of a CSV time series.
    Fit(FitArgs),
    /// Eigenbasis overlap statistics of an initial state.
    Hubcheck(HubcheckArgs),
    /// Compare the two-spin model with its closed-form entropy.
    Oracle(OracleArgs),
}

/// Overrides for every configuration field; unset flags keep the value from
/// `--config` (or the built-in default).
#[derive(Args, Debug, Default)]
pub struct ConfigFlags {
    /// TOML configuration file with [model], [disorder], [initial], [grid],
    /// [propagator], [observables] and [output] tables.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Model: xxz or two_spin.
    #[arg(long)]
    pub model: Option<String>,
    /// Chain length.
    #[arg(short = 'L', long = "length")]
    pub chain_len: Option<usize>,
    /// Anisotropy Δ.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Flip-flop coupling J⊥.
    #[arg(long)]
    pub hopping: Option<f64>,
    /// open or periodic.
    #[arg(long)]
    pub boundary: Option<String>,
    /// Two-spin interaction V.
    #[arg(long)]
    pub v_int: Option<f64>,
    /// Comma-separated disorder strengths.
    #[arg(short = 'W', long = "disorder", value_delimiter = ',')]
    pub strengths: Option<Vec<f64>>,
    /// Realizations per disorder strength.
    #[arg(short = 'R', long)]
    pub realizations: Option<usize>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Initial-state preset (neel_x, neel_y, neel_z, ferro_x, ferro_y, domains_x, domains_y).
    #[arg(long)]
    pub state: Option<String>,
    /// Grid preset: log or uniform.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub points_per_decade: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    /// krylov or exact.
    #[arg(long)]
    pub propagator: Option<String>,
    /// Evolve magnetization sectors separately.
    #[arg(long)]
    pub sector_blocked: Option<bool>,
    /// Krylov subspace dimension.
    #[arg(long)]
    pub krylov_dim: Option<usize>,
    /// Krylov error tolerance per substep.
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Record the half-chain entropy.
    #[arg(long)]
    pub half_chain: Option<bool>,
    /// Results directory.
    #[arg(short, long, env = "MBL_OUTPUT_DIR")]
    pub output: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(short = 'j', long, env = "MBL_WORKERS")]
    pub workers: Option<usize>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub config: ConfigFlags,
    /// Write averaged entropies in bits instead of nats.
    #[arg(long)]
    pub bits: bool,
    /// Print the effective configuration and exit.
    #[arg(long)]
    pub dry_run: bool,
}

#[derive(Args, Debug)]
pub struct AggregateArgs {
    /// Results directory written by `run`.
    #[arg(env = "MBL_OUTPUT_DIR")]
    pub dir: PathBuf,
    #[arg(long)]
    pub bits: bool,
}

#[derive(Args, Debug)]
pub struct SeriesInput {
    /// CSV with a `t` column.
    pub input: PathBuf,
    /// Column to analyse.
    #[arg(long, default_value = "S_avg")]
    pub column: String,
}

#[derive(Args, Debug)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub series: SeriesInput,
    /// Peaks must reach this fraction of the tallest non-DC bin.
    #[arg(long, default_value_t = 0.05)]
    pub threshold: f64,
    /// Spectrum CSV (stdout summary only when omitted).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    #[command(flatten)]
    pub series: SeriesInput,
    /// Multiplier applied before fitting, usually the chain length.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Only minima with t > t_min enter the fit.
    #[arg(long, default_value_t = 1.0)]
    pub t_min: f64,
    /// Only minima with t <= t_max enter the fit.
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Odd moving-median width applied before locating minima.
    #[arg(long, default_value_t = 1)]
    pub window: usize,
    /// Fit JSON (stdout when omitted).
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct HubcheckArgs {
    #[command(flatten)]
    pub config: ConfigFlags,
}

#[derive(Args, Debug)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 0.25)]
    pub v_int: f64,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    /// End time (default 8π).
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Largest tolerated deviation from the closed form.
    #[arg(long, default_value_t = 1e-9)]
    pub tolerance: f64,
    /// Trajectory CSV with the closed form alongside.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log).init();
    let outcome = match cli.command {
        Command::Run(a) => commands::run(a),
        Command::Aggregate(a) => commands::aggregate(a),
        Command::Spectrum(a) => commands::spectrum(a),
        Command::Fit(a) => commands::fit(a),
        Command::Hubcheck(a) => commands::hubcheck(a),
        Command::Oracle(a) => commands::oracle(a),
    };
    if let Err(e) = outcome {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
