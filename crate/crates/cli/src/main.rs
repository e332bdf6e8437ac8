//! `bandtaper`: estimate conditional mean operators from CSV data and run the
//! Monte-Carlo studies.

mod commands;
mod config;
mod error;
mod manifest;
mod tables;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "bandtaper", version, about = "Bandable-covariance estimators of Σ_YX Σ_XX⁻¹")]
pub struct Cli {
    /// Master seed; overrides any seed in the config.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads (0 = one per core). Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// TOML experiment config for `study`, `compare` and `rate`.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,

    /// Select the candidate with the smallest cross-validated log-likelihood.
    #[arg(long, global = true)]
    pub paper_literal_minimize: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one estimator to a CSV and write its coefficient matrix.
    Estimate(EstimateArgs),
    /// Risk grid over (n, α) cells, plus the k × a comparison.
    Study,
    /// k × a comparison of two estimators (t-values of loss differences).
    Compare,
    /// Convergence-rate sweep of the blockwise estimator.
    Rate,
    /// Leave-one-out tuning on a CSV.
    Tune(TuneArgs),
    /// Forecast the last time points of a spatio-temporal panel.
    Forecast(ForecastArgs),
    /// Off-band precision mass of the simulation truth.
    Decay(DecayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorKind {
    Tapering,
    Blockwise,
    Banding,
    Sample,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Bandwidth.
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    /// Blockwise block-size constant.
    #[arg(long, default_value_t = 5.0)]
    pub a: f64,
    /// Eigenvalue floor of the positive-definite adjustment.
    #[arg(long, default_value_t = 0.5)]
    pub epsilon: f64,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    /// CSV with a header row; the first p0 columns are predictors.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub p0: usize,
    #[arg(long, value_enum, default_value = "tapering")]
    pub method: EstimatorKind,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Subtract column means before estimating.
    #[arg(long)]
    pub center: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TuneArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub p0: usize,
    /// tapering, blockwise, banding, or a `-ppp` variant.
    #[arg(long, default_value = "tapering")]
    pub method: String,
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6,7,8,9,10")]
    pub ks: Vec<usize>,
    #[arg(long = "a", value_delimiter = ',', default_value = "5,10,20")]
    pub a_values: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub epsilon: Vec<f64>,
    /// Posterior draws per fold for `-ppp` methods.
    #[arg(long, default_value_t = 50)]
    pub cv_draws: usize,
    /// Posterior draws for the final `-ppp` estimate.
    #[arg(long, default_value_t = 1000)]
    pub draws: usize,
    #[arg(long)]
    pub center: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ForecastArgs {
    /// Panel CSV: `unit_id,x_s1_t1,x_s2_t1,…,x_sS_tT`.
    #[arg(long)]
    pub panel: PathBuf,
    /// Number of observed time points; later ones are forecast.
    #[arg(long)]
    pub t0: usize,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "tapering,blockwise,banding")]
    pub methods: Vec<EstimatorKind>,
    #[command(flatten)]
    pub fit: FitArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DecayArgs {
    #[arg(long, default_value_t = 200)]
    pub p: usize,
    #[arg(long, default_value_t = 0.6)]
    pub rho: f64,
    #[arg(long, default_value_t = 0.3)]
    pub alpha: f64,
    #[arg(long, value_delimiter = ',', default_value = "3,5,8")]
    pub ks: Vec<usize>,
    #[arg(long = "a", value_delimiter = ',', default_value = "5")]
    pub a_values: Vec<f64>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let args: Vec<String> = std::env::args().collect();
    let run = || commands::run(&cli, args);
    let outcome = bandtaper::with_threads(cli.threads, run).map_err(CliError::from).and_then(|r| r);
    match outcome {
        Ok(manifest) => {
            println!("{}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
