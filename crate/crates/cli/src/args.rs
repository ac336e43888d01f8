use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "parrondo",
    version,
    about = "Dynamical Parrondo paradox: verification and experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the profile conditions, composition gains and (k ≥ 3) the cone condition.
    Verify(VerifyArgs),
    /// Iterate a map or word and write the orbit.
    Orbit(OrbitArgs),
    /// Monte Carlo run of the random iterated function system.
    Ifs(IfsArgs),
    /// Admissibility table over a grid of (p, a).
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Default, Args)]
pub struct CommonArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub a: Option<f64>,
    #[arg(long)]
    pub w: Option<f64>,
    #[arg(long)]
    pub d: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub sequences: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Grid size for the composition gain certificate.
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long)]
    pub cone_samples: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OrbitArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// f0, f1, a word such as F0,F1, h, or h3 / j3 / h3,j3.
    #[arg(long)]
    pub map: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    pub r: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,
    /// Cartesian start, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub start: Option<Vec<f64>>,
    /// Keep every n-th point after trap entry.
    #[arg(long)]
    pub decimate: Option<usize>,
}

#[derive(Debug, Args)]
pub struct IfsArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, allow_negative_numbers = true)]
    pub threshold: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub start_r: Option<f64>,
    #[arg(long)]
    pub start_theta: Option<f64>,
    /// Also write per-sequence rows (sequence_id,m,k_m,delta_2m) as CSV.
    #[arg(long)]
    pub per_sequence: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_delimiter = ',')]
    pub p_grid: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub a_grid: Option<Vec<f64>>,
    /// Use a = factor / (p(1−p)) for every p instead of an a grid.
    #[arg(long)]
    pub a_factor: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub threshold: Option<f64>,
}
