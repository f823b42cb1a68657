//! `kga`: generate synthetic scenes, train, evaluate, benchmark and export
//! occupancy-grid snapshots.

mod commands;
mod meta;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kga::config::RunConfig;

#[derive(Parser, Debug)]
#[command(
    name = "kga",
    version,
    about = "Occupancy-grid anticipation with a Kalman GRU array"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Configuration file of `key = value` lines (a previous `run.meta` works).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set noise.miss_rate=0`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Allow writing into a non-empty output directory.
    #[arg(long, global = true)]
    force: bool,
}

impl Common {
    fn resolve(&self) -> kga::Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        for assignment in &self.overrides {
            config.apply_override(assignment)?;
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate Boids scenes and write `seq_NNNN.ogsq` plus clean tracks.
    Generate {
        #[command(flatten)]
        common: Common,
    },
    /// Train `model.arch` on every sequence in a generated directory.
    Train {
        /// Directory of `seq_NNNN.ogsq` files.
        #[arg(long)]
        data: PathBuf,
        /// Start from this checkpoint instead of a fresh initialisation.
        #[arg(long)]
        init: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Score KGA and ConvGRU under each noise condition.
    Eval {
        /// Directory of `seq_NNNN.ogsq` files with their track CSVs.
        #[arg(long)]
        data: PathBuf,
        /// KGA checkpoint; a fresh initialisation is used (and flagged) when absent.
        #[arg(long)]
        kga: Option<PathBuf>,
        /// ConvGRU checkpoint; a fresh initialisation is used (and flagged) when absent.
        #[arg(long)]
        convgru: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Time single-frame inference on one thread.
    Bench {
        /// Which model to time: kga, convgru or both.
        #[arg(long, default_value = "both")]
        model: String,
        #[arg(long)]
        kga: Option<PathBuf>,
        #[arg(long)]
        convgru: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Write measurement/truth (and optionally predicted) frames as PGM images.
    ExportViz {
        /// One OGSQ1 sequence file.
        #[arg(long)]
        data: PathBuf,
        /// Also export the model's occupancy probabilities.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

fn run(cli: Cli) -> kga::Result<()> {
    match cli.command {
        Command::Generate { common } => commands::generate(&common),
        Command::Train { data, init, common } => commands::train(&common, &data, init.as_deref()),
        Command::Eval {
            data,
            kga,
            convgru,
            common,
        } => commands::eval(&common, &data, kga.as_deref(), convgru.as_deref()),
        Command::Bench {
            model,
            kga,
            convgru,
            common,
        } => commands::bench(&common, &model, kga.as_deref(), convgru.as_deref()),
        Command::ExportViz {
            data,
            checkpoint,
            common,
        } => commands::export_viz(&common, &data, checkpoint.as_deref()),
    }
}

/// `error: kind=<kind> [offset=<n>] message="<text>"` on one line.
fn error_line(err: &kga::Error) -> String {
    let offset = match err {
        kga::Error::Format { offset, .. } => format!(" offset={offset}"),
        _ => String::new(),
    };
    let message = err.to_string().replace(['\n', '\r'], " ").replace('"', "'");
    format!("error: kind={}{offset} message=\"{message}\"", err.kind())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", error_line(&err));
            ExitCode::FAILURE
        }
    }
}
