use std::fs::File;
use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flexsector::config::{Config, ConfigError, DEFAULT_SCENARIO};
use flexsector::experiment::{run_experiment, Estimator, ExperimentError, ExperimentSpec, Kind};
use flexsector_core::{Scheme, Variant};

/// Environment variable that overrides `--seed`.
const SEED_ENV: &str = "FLEXSECTOR_SEED";

#[derive(Parser)]
#[command(version, about = "Flexible-sector base station experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[command(rename_all = "snake_case")]
enum Command {
    /// Closed-form sector power against Monte Carlo.
    ValidateTheorem1(Common),
    /// Rotation, allocation and sector loads of the configured instance.
    CaseStudy(Common),
    /// Throughput versus power budget.
    SweepPower(Common),
    /// Throughput versus number of antennas.
    SweepAntennas(Common),
    /// Throughput versus mean number of users.
    SweepUsers(Common),
    /// Throughput versus number of sectors at 60 bins.
    SweepSectors(Common),
    /// Throughput versus share of background users.
    SweepBackgroundRatio(Common),
    /// Throughput versus number of single-bin hotspots with two sectors.
    SweepHotspots(Common),
    /// Two-step and low-complexity algorithms against exhaustive search.
    OracleCompare(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file; the built-in default scenario when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// CSV output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Hotspot placements averaged per sweep point.
    #[arg(long, default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 1_000_000)]
    mc_realizations: u64,
    /// Comma-separated scheme names.
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<Scheme>>,
    /// Closed form used by the optimizer: paper or exact.
    #[arg(long, default_value = "paper")]
    variant: Variant,
    /// Keep the configured hotspot starts instead of drawing them.
    #[arg(long)]
    fixed_hotspots: bool,
    /// Monte-Carlo estimator for validate_theorem1: plain or stratified.
    #[arg(long, default_value = "plain")]
    estimator: Estimator,
}

impl Command {
    fn split(self) -> (Kind, Common) {
        match self {
            Command::ValidateTheorem1(c) => (Kind::ValidateTheorem1, c),
            Command::CaseStudy(c) => (Kind::CaseStudy, c),
            Command::SweepPower(c) => (Kind::SweepPower, c),
            Command::SweepAntennas(c) => (Kind::SweepAntennas, c),
            Command::SweepUsers(c) => (Kind::SweepUsers, c),
            Command::SweepSectors(c) => (Kind::SweepSectors, c),
            Command::SweepBackgroundRatio(c) => (Kind::SweepBackgroundRatio, c),
            Command::SweepHotspots(c) => (Kind::SweepHotspots, c),
            Command::OracleCompare(c) => (Kind::OracleCompare, c),
        }
    }
}

fn run(kind: Kind, args: Common) -> Result<(), ExperimentError> {
    let config = match &args.scenario {
        Some(path) => Config::load(path)?,
        None => Config::from_toml(DEFAULT_SCENARIO)?,
    };
    let mut seed = args.seed;
    if let Ok(v) = std::env::var(SEED_ENV) {
        seed = v.trim().parse().map_err(|_| ExperimentError::Spec(format!("{SEED_ENV}={v:?} is not a u64")))?;
        log::warn!("{SEED_ENV} overrides the seed: {} -> {seed}", args.seed);
    }
    if args.samples == 0 || args.mc_realizations == 0 {
        return Err(ExperimentError::Spec("--samples and --mc-realizations must be positive".into()));
    }
    let spec = ExperimentSpec {
        kind,
        config,
        seed,
        samples: args.samples,
        mc_realizations: args.mc_realizations,
        schemes: args.schemes.unwrap_or_else(|| kind.default_schemes()),
        variant: args.variant,
        fixed_hotspots: args.fixed_hotspots,
        estimator: args.estimator,
    };
    log::info!("{kind} on scenario {} with seed {seed}", spec.config.hash());
    let table = run_experiment(&spec)?;
    match &args.out {
        Some(path) => table.write_csv(BufWriter::new(File::create(path)?))?,
        None => table.write_csv(io::stdout().lock())?,
    }
    log::info!("{} rows written", table.rows.len());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let (kind, args) = Cli::parse().command.split();
    match run(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let model = match &e {
                ExperimentError::Model(m) => Some(m),
                ExperimentError::Config(ConfigError::Model(m)) => Some(m),
                _ => None,
            };
            if let Some(flexsector_core::Error::InvalidScenario(violations)) = model {
                for v in violations {
                    eprintln!("  {v}");
                }
            }
            ExitCode::FAILURE
        }
    }
}
