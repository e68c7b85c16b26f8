//! `bemf`: train, tune and evaluate Bernoulli matrix factorization and the
//! baseline recommenders from a TOML experiment config.

mod commands;
mod config;
mod error;
mod evaluate;
mod models;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "bemf",
    version,
    about = "Bernoulli matrix factorization for recommender systems"
)]
struct Cli {
    /// Worker threads (defaults to one per core).
    #[arg(long, global = true, env = "BEMF_WORKERS")]
    workers: Option<usize>,

    /// Only log warnings and errors.
    #[arg(long, short, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// Experiment config file.
    #[arg(long, short)]
    config: PathBuf,

    /// Overrides `output_dir`.
    #[arg(long, short)]
    output: Option<PathBuf>,

    /// Overrides `model.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let mut c = ExperimentConfig::load(&self.config)?;
        if let Some(o) = &self.output {
            c.output_dir = o.clone();
        }
        if let Some(s) = self.seed {
            c.model.seed = s;
        }
        Ok(c)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train the configured model and write it with a per-iteration cost log.
    Train(Common),
    /// Train and evaluate every hyperparameter combination of `[grid]`.
    GridSearch {
        #[command(flatten)]
        common: Common,
        /// Run the grid; without it only the combination count is reported.
        #[arg(long)]
        yes: bool,
        /// Refuse grids with more combinations than this.
        #[arg(long)]
        max_cells: Option<usize>,
    },
    /// Write the evaluation report CSVs for a trained model.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Model file written by `train`.
        #[arg(long, short)]
        model: PathBuf,
        /// Reliability add-on file (default: next to the model).
        #[arg(long)]
        reliability_model: Option<PathBuf>,
    },
    /// Write the seeded train/test split of `data.path`.
    Split(Common),
    /// Describe a config's data and/or a model file.
    Info {
        #[arg(long, short)]
        config: Option<PathBuf>,
        #[arg(long, short)]
        model: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(CliError::Validation("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Train(c) => commands::train(&c.load()?),
        Command::GridSearch {
            common,
            yes,
            max_cells,
        } => commands::grid_search(&common.load()?, yes, max_cells),
        Command::Evaluate {
            common,
            model,
            reliability_model,
        } => commands::evaluate(&common.load()?, &model, reliability_model.as_deref()),
        Command::Split(c) => commands::split(&c.load()?),
        Command::Info { config, model } => {
            let config = config.as_deref().map(ExperimentConfig::load).transpose()?;
            print!("{}", commands::info(config.as_ref(), model.as_deref())?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = if cli.quiet { "warn" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .target(env_logger::Target::Stderr)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
