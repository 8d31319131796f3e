//! `rdm-gmr`: calibrate GSI standard errors, estimate total escapement and
//! run the estimator comparison study from the command line.

mod commands;
mod data;
pub mod report;
pub mod study;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use commands::{cmd_calibrate, cmd_diagnose, cmd_estimate, cmd_psi_calibrate, cmd_simulate};

#[derive(Debug, Parser)]
#[command(name = "rdm-gmr", version, about = "Escapement estimation from genetic stock identification data")]
pub struct Cli {
    /// Caps the worker threads used for chains and replicates.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Logs progress at info level.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fits the weekly variance-proportionality slope and inflation factors.
    Calibrate(CalibrateArgs),
    /// Reports how well the reported variances follow s^2 ~ p(1 - p).
    Diagnose(DiagnoseArgs),
    /// Estimates total escapement with one or more methods.
    Estimate(EstimateArgs),
    /// Runs the replicated comparison study from a config file.
    Simulate(SimulateArgs),
    /// Writes prior-predictive histograms of pi[1,1] for several psi values.
    PsiCalibrate(PsiArgs),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Directory that receives the report files.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Falls back to RDM_GMR_SEED, then to the config file, then to 1.
    #[arg(long, env = "RDM_GMR_SEED")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct DataArgs {
    /// Long-form composition table: week,stock,p_hat,se.
    #[arg(long)]
    pub data: PathBuf,
    /// Weekly table: week,weight,n.
    #[arg(long)]
    pub weights: PathBuf,
    /// Comma-separated names of the lake-type stocks.
    #[arg(long, value_delimiter = ',')]
    pub mask: Vec<String>,
    /// Lake-type escapement count.
    #[arg(long = "M", id = "lake_count")]
    pub lake_count: Option<f64>,
    /// TOML or JSON file with `M` and `lake_stocks`; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Fits one slope across all weeks instead of one per week.
    #[arg(long)]
    pub pooled: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CalibrateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    /// Weeks whose R^2 falls below this are flagged.
    #[arg(long, default_value_t = gmr_core::calibration::DEFAULT_R2_THRESHOLD)]
    pub r2_threshold: f64,
}

#[derive(Debug, Clone, Args)]
pub struct McmcArgs {
    #[arg(long)]
    pub chains: Option<usize>,
    /// Kept draws per chain.
    #[arg(long)]
    pub keep: Option<usize>,
    #[arg(long)]
    pub initial_iters: Option<usize>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub target_accept: Option<f64>,
    /// Scale of the AR(1) latent field.
    #[arg(long)]
    pub psi: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub mcmc: McmcArgs,
    /// mom, mom-alt, mom-naive, rdm, mmd, rdm-dir, rdm-ar1, mmd-dir, mmd-ar1 or all.
    #[arg(long = "method", default_value = "mom")]
    pub methods: Vec<String>,
    /// Prior for methods given without one (`rdm`, `mmd`).
    #[arg(long, default_value = "ar1")]
    pub prior: String,
    /// Uses z = 1.96 for Wald intervals.
    #[arg(long)]
    pub paper_z: bool,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// Writes every kept draw to chains_<method>.csv.
    #[arg(long)]
    pub dump_chains: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Study configuration (TOML or JSON).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
    #[command(flatten)]
    pub mcmc: McmcArgs,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Overrides the config's method list.
    #[arg(long = "method")]
    pub methods: Vec<String>,
    #[arg(long)]
    pub paper_z: bool,
}

#[derive(Debug, Clone, Args)]
pub struct PsiArgs {
    /// Number of stocks.
    #[arg(short = 'k', long = "stocks", default_value_t = 4)]
    pub k: usize,
    /// Comma-separated values to compare.
    #[arg(long, value_delimiter = ',', default_values_t = [0.5, 2.0, 5.0, 10.0])]
    pub psi: Vec<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub draws: usize,
    #[arg(long, default_value_t = 50)]
    pub bins: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    match cli.command {
        Command::Calibrate(a) => cmd_calibrate(&a).map(drop),
        Command::Diagnose(a) => cmd_diagnose(&a).map(drop),
        Command::Estimate(a) => cmd_estimate(&a).map(drop),
        Command::Simulate(a) => cmd_simulate(&a).map(drop),
        Command::PsiCalibrate(a) => cmd_psi_calibrate(&a).map(drop),
    }
}
