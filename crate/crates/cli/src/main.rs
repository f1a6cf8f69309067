//! `codemix`: switching statistics, switching features and classifier
//! experiments over tagged code-mixed corpora.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{CommonArgs, PipelineArgs};

#[derive(Debug, Parser)]
#[command(
    name = "codemix",
    version,
    about = "Code-switching features for code-mixed text classification"
)]
struct Cli {
    /// TOML file with default settings.
    #[arg(long, global = true, env = "CODEMIX_CONFIG", value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(flatten)]
    common: CommonArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Switching/label association table, one column per corpus.
    Stats {
        #[arg(required = true)]
        corpora: Vec<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Switching features of every utterance.
    Features {
        corpus: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Train a classifier and write the model file plus its pipeline sidecar.
    Train {
        corpus: PathBuf,
        #[arg(short, long)]
        model: PathBuf,
        /// Also write the training vectors as `label index:value ...` rows.
        #[arg(long, value_name = "FILE")]
        export_vectors: Option<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Evaluate a trained model on a corpus.
    Eval {
        corpus: PathBuf,
        #[arg(short, long)]
        model: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// k-fold cross-validation, optionally with and without switching features.
    Cv {
        corpus: PathBuf,
        #[arg(long)]
        k: Option<usize>,
        /// Run twice, without and with the switching features, and report the delta.
        #[arg(long)]
        ablate_switching: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
    /// Remove negatives that a scorer finds easy.
    Subsample {
        corpus: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Probability below which a negative is dropped.
        #[arg(long)]
        tau: Option<f64>,
        /// Trained model to score with; otherwise one is fit on the corpus.
        #[arg(short, long)]
        model: Option<PathBuf>,
        #[command(flatten)]
        pipeline: PipelineArgs,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("codemix: {err:#}");
            ExitCode::FAILURE
        }
    }
}
