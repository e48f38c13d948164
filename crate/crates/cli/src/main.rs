//! `fracture`: manifest-driven data generation, training and evaluation.

mod error;
mod generate;
mod learn;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "fracture", version, about = "Fracture simulation and surrogate-model pipeline")]
struct Cli {
    /// Worker threads for simulations and per-example gradients (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate rule-based surrogate records into shards.
    GenRulebased(Io),
    /// Run phase-field simulations on sampled configurations.
    GenPhasefield(Io),
    /// Embed deck texts and store the embeddings.
    Embed(Io),
    /// Train a model through a curriculum of stages.
    Pretrain(Io),
    /// Fine-tune a checkpoint on a downstream task.
    Finetune(Io),
    /// Write model predictions for records.
    Predict(Io),
    /// Score a checkpoint or a constant predictor per material and loading.
    Evaluate(Io),
}

#[derive(clap::Args)]
struct Io {
    /// JSON manifest describing the run.
    #[arg(long)]
    manifest: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let ctx = output::RunContext { workers: cli.workers };
    let result = match &cli.command {
        Command::GenRulebased(io) => generate::rulebased(&io.manifest, &io.out, &ctx),
        Command::GenPhasefield(io) => generate::phasefield(&io.manifest, &io.out, &ctx),
        Command::Embed(io) => learn::embed(&io.manifest, &io.out),
        Command::Pretrain(io) => learn::pretrain(&io.manifest, &io.out, &ctx),
        Command::Finetune(io) => learn::finetune(&io.manifest, &io.out, &ctx),
        Command::Predict(io) => learn::predict(&io.manifest, &io.out, &ctx),
        Command::Evaluate(io) => learn::evaluate(&io.manifest, &io.out, &ctx),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(error::exit_code(&e))
        }
    }
}
