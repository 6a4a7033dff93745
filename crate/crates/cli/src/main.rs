mod commands;
mod error;
mod output;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use error::CliError;
use output::{Format, Output};

#[derive(Parser)]
#[command(name = "grouphoto", version, about = "Aesthetic scoring of group photographs")]
struct Cli {
    /// features.toml with thresholds, seeds and hyperparameters.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "human")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProviderArg {
    Fixture,
    Http,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Task {
    Classify,
    Regress,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SelectArg {
    None,
    Filter,
    Rfe,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the 90 features of every image in a directory.
    Extract {
        image_dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum)]
        provider: Option<ProviderArg>,
        /// Worker threads; defaults to the number of CPUs.
        #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
        jobs: Option<u16>,
        /// Records file of the annotation service; fills score and label.
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Fit the classifier or the regressor and report cross-validated metrics.
    Train {
        #[arg(long, value_enum)]
        task: Task,
        #[arg(long)]
        features: PathBuf,
        #[arg(long, value_enum, default_value = "none")]
        select: SelectArg,
        #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
        k: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score images with a trained model.
    Score {
        #[arg(long)]
        model: PathBuf,
        #[arg(required = true)]
        images: Vec<PathBuf>,
        #[arg(long, value_enum)]
        provider: Option<ProviderArg>,
    },
    /// Metrics of a model on a feature CSV, or the repeated-split protocol.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        features: PathBuf,
        /// Retrain on this many random 80/20 splits instead of scoring the CSV.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        splits: Option<u64>,
    },
    /// Score difference between a standard photo and its variants.
    Compare {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        standard: PathBuf,
        #[arg(long, required = true, num_args = 1..)]
        others: Vec<PathBuf>,
        #[arg(long, value_enum)]
        provider: Option<ProviderArg>,
    },
    /// Rank features by random-forest Gini importance.
    Importance {
        #[arg(long)]
        features: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = match &cli.config {
        Some(p) => grouphoto::Config::load(p)?,
        None => grouphoto::Config::default(),
    };
    let out = Output::new(cli.format);
    match cli.command {
        Command::Extract {
            image_dir,
            out: csv,
            provider,
            jobs,
            records,
        } => {
            commands::set_provider(&mut cfg, provider);
            commands::extract(&cfg, &out, &image_dir, &csv, jobs, records.as_deref())
        }
        Command::Train {
            task,
            features,
            select,
            k,
            out: model,
        } => commands::train(&cfg, &out, task, &features, select, k as usize, &model),
        Command::Score {
            model,
            images,
            provider,
        } => {
            commands::set_provider(&mut cfg, provider);
            commands::score(&cfg, &out, &model, &images)
        }
        Command::Evaluate {
            model,
            features,
            splits,
        } => commands::evaluate(&cfg, &out, &model, &features, splits.map(|s| s as usize)),
        Command::Compare {
            model,
            standard,
            others,
            provider,
        } => {
            commands::set_provider(&mut cfg, provider);
            commands::compare(&cfg, &out, &model, &standard, &others)
        }
        Command::Importance { features } => commands::importance(&cfg, &out, &features),
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.code());
    }
}
