//! `incident-fusion`: ingest, match, encode, evaluate and explain.
//!
//! Exit codes: 0 success, 2 input or schema error, 3 missing artifact,
//! 4 numerical failure.

mod artifacts;
mod commands;
mod config;
mod failure;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Context, ExplainArgs, IngestArgs, RandomArgs};
use config::{ExplainTarget, CONFIG_ENV};
use failure::Failure;

#[derive(Debug, Parser)]
#[command(name = "incident-fusion", version, about = "Incident duration prediction with fused text and traffic features")]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; outputs do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate incident and detector CSVs into the cache.
    Ingest {
        /// Generate a synthetic dataset instead, e.g. `seed=1,n=200,stations=20`.
        #[arg(long)]
        synth: Option<String>,
        #[arg(long)]
        incidents: Option<PathBuf>,
        #[arg(long)]
        station_meta: Option<PathBuf>,
        #[arg(long)]
        station_readings: Option<PathBuf>,
    },
    /// Match incidents to detector stations and extract the six series.
    Match {
        /// Search radius in metres.
        #[arg(long)]
        radius: Option<f64>,
    },
    /// Train text and series encoders over the grid and cache the vectors.
    TrainEncoders,
    /// Tune and rank every model on the baseline features.
    RankModels,
    /// Cross-validate models on the baseline and every fused scenario.
    RunGrid {
        /// Comma-separated model codes, e.g. `gbdt,rf`.
        #[arg(long, value_delimiter = ',')]
        models: Option<Vec<String>>,
    },
    /// Pareto fronts of an outcomes file in (MAPE, RMSE).
    Pareto {
        #[arg(long)]
        outcomes: Option<PathBuf>,
    },
    /// MAPE and RMSE of random vector pairs.
    RandomExperiment {
        #[arg(long, default_value_t = 100)]
        dims: usize,
        #[arg(long, default_value_t = 10_000)]
        pairs: usize,
        #[arg(long, default_value_t = 1.0)]
        low: f64,
        #[arg(long, default_value_t = 10.0)]
        high: f64,
    },
    /// LIME word importance for the severity or duration-group classifier.
    Explain {
        #[arg(long, value_enum)]
        target: Option<ExplainTarget>,
        /// Explain this text instead of one incident per class.
        #[arg(long)]
        description: Option<String>,
        #[arg(long)]
        class: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = config::load(cli.config.as_deref())?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(j) = cli.jobs {
        cfg.jobs = j;
    }
    let ctx = Context::new(cfg);
    match cli.command {
        Command::Ingest {
            synth,
            incidents,
            station_meta,
            station_readings,
        } => commands::ingest(
            &ctx,
            IngestArgs {
                synth,
                incidents,
                station_meta,
                station_readings,
            },
        ),
        Command::Match { radius } => commands::match_incidents(&ctx, radius),
        Command::TrainEncoders => commands::train_encoders(&ctx),
        Command::RankModels => commands::rank_models(&ctx),
        Command::RunGrid { models } => commands::run_grid_command(&ctx, models),
        Command::Pareto { outcomes } => commands::pareto(&ctx, outcomes),
        Command::RandomExperiment { dims, pairs, low, high } => {
            commands::random_experiment(&ctx, RandomArgs { dims, pairs, low, high })
        }
        Command::Explain {
            target,
            description,
            class,
        } => commands::explain(
            &ctx,
            ExplainArgs {
                target,
                description,
                class,
            },
        ),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code)
        }
    }
}
