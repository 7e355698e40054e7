//! `pathwise`: synthesise, preprocess, train, predict, explain and evaluate.

mod commands;
mod output;
mod resolve;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pathwise::Error;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "pathwise", version, about = "Pathway-aware graph classification and explanation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand.
#[derive(Args, Serialize)]
pub struct Common {
    /// JSON object of settings; keys mirror the long flag names with `_`.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Output directory (falls back to $PATHWISE_OUTPUT_DIR, then the config).
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Clean a raw dataset directory (self-loops, duplicates, isolated nodes).
    Preprocess(commands::PreprocessArgs),
    /// Generate a planted-motif dataset.
    Synth(commands::SynthArgs),
    /// Cross-validate and fit a model on a dataset.
    Train(commands::TrainArgs),
    /// Class probabilities for dataset graphs.
    Predict(commands::PredictArgs),
    /// Learn pathway masks and extract explanation subgraphs.
    Explain(commands::ExplainArgs),
    /// Node rankings from a reference method.
    Baseline(commands::BaselineArgs),
    /// Classification, fidelity, path and enrichment metrics.
    Eval(commands::EvalArgs),
    /// Write an explanation as GraphML, DOT or JSON.
    Export(commands::ExportArgs),
}

fn run(command: Command) -> pathwise::Result<()> {
    match command {
        Command::Preprocess(a) => commands::preprocess(&a),
        Command::Synth(a) => commands::synth(&a),
        Command::Train(a) => commands::train(&a),
        Command::Predict(a) => commands::predict(&a),
        Command::Explain(a) => commands::explain(&a),
        Command::Baseline(a) => commands::baseline(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::Export(a) => commands::export(&a),
    }
}

fn fail(kind: &str, message: &str, code: u8) -> ExitCode {
    let line = serde_json::json!({ "error": kind, "message": message.replace('\n', " ") });
    eprintln!("{line}");
    ExitCode::from(code)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.to_string();
            let first = message.lines().next().unwrap_or("invalid arguments");
            return fail("usage", first.trim_start_matches("error: "), 2);
        }
    };
    // only `train --jobs` runs in parallel, on its own pool
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(1).build_global() {
        return fail("internal", &e.to_string(), 1);
    }
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let code = if matches!(e, Error::Usage(_)) { 2 } else { 1 };
            fail(e.kind(), &e.to_string(), code)
        }
    }
}
