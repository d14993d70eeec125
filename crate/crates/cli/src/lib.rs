//! Command-line runner for the `udn-core` experiments.

pub mod commands;
pub mod config;
pub mod error;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{RunConfig, DEFAULT_SEED};
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "udn", version, about = "Ultra-dense network simulation experiments")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// JSON run configuration
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed for every random stream
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores); outputs do not depend on it
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Output directory
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Monte Carlo trial count for every stochastic command
    #[arg(long, global = true)]
    pub trials: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Reactive, Fraunhofer and critical distances for one antenna setup
    Regions(RegionsArgs),
    /// Link-distance probability table
    Table1,
    /// Spatial throughput against density for each configured model
    Throughput,
    /// Critical-density table over SINR thresholds and far-field exponents
    Critical,
    /// Interference-power rasters for grid deployments
    Heatmap,
    /// Throughput curves under SIC, IA and ICA plus a decoding trace
    Mitigation,
    /// Fit pathloss models to distance/power measurements
    Fit(FitArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RegionsArgs {
    #[arg(long)]
    pub frequency_hz: Option<f64>,
    /// Largest antenna dimension D
    #[arg(long)]
    pub antenna_m: Option<f64>,
    #[arg(long)]
    pub h_tx_m: Option<f64>,
    #[arg(long)]
    pub h_rx_m: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// CSV with header `distance_m,rx_power_dbm[,frequency_hz]`
    #[arg(long)]
    pub input: Option<PathBuf>,
}

/// Everything a command needs after flags and file have been merged.
#[derive(Debug, Clone)]
pub struct Context {
    pub config: RunConfig,
    pub seed: u64,
    pub out: PathBuf,
}

impl Context {
    pub fn resolve(global: &GlobalArgs, command: &Command) -> CliResult<Self> {
        let mut config = match &global.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = global.seed {
            config.seed = Some(seed);
        }
        if let Some(trials) = global.trials.or(config.trials) {
            if trials == 0 {
                return Err(CliError::Config("trials must be at least 1".into()));
            }
            config.trials = Some(trials);
            config.throughput.trials = trials;
            config.critical.trials = trials;
            config.mitigation.trials = trials;
        }
        match command {
            Command::Regions(a) => {
                let r = &mut config.regions;
                r.frequency_hz = a.frequency_hz.unwrap_or(r.frequency_hz);
                r.antenna_dimension_m = a.antenna_m.unwrap_or(r.antenna_dimension_m);
                r.h_tx_m = a.h_tx_m.unwrap_or(r.h_tx_m);
                r.h_rx_m = a.h_rx_m.unwrap_or(r.h_rx_m);
            }
            Command::Fit(a) => {
                if a.input.is_some() {
                    config.fit.input = a.input.clone();
                }
            }
            _ => {}
        }
        let seed = config.seed.unwrap_or(DEFAULT_SEED);
        config.seed = Some(seed);
        Ok(Self { config, seed, out: global.out.clone() })
    }
}

/// Resolve the context, size the worker pool and dispatch. Returns the stdout summary.
pub fn run(cli: &Cli) -> CliResult<String> {
    let ctx = Context::resolve(&cli.global, &cli.command)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.global.threads)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    std::fs::create_dir_all(&ctx.out)?;
    pool.install(|| match &cli.command {
        Command::Regions(_) => commands::regions(&ctx),
        Command::Table1 => commands::table1(&ctx),
        Command::Throughput => commands::throughput(&ctx),
        Command::Critical => commands::critical(&ctx),
        Command::Heatmap => commands::heatmap(&ctx),
        Command::Mitigation => commands::mitigation(&ctx),
        Command::Fit(_) => commands::fit(&ctx),
    })
}
