use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use seqrisk::commands::{self, EvaluateArgs, ExperimentArgs, GenerateArgs, PrepareArgs, ProjectArgs, TrainArgs};
use seqrisk::experiments::ExperimentKind;
use seqrisk::features::ObservationWindow;
use seqrisk::models::ModelKind;

#[derive(Parser)]
#[command(name = "seqrisk", version, about = "Longitudinal clinical-risk prediction engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cohort as patients and events tables.
    Generate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Select, split and slice a cohort into tensor files.
    Prepare {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        patients: PathBuf,
        #[arg(long)]
        window: ObservationWindow,
        #[arg(long)]
        binarize: bool,
        #[arg(long)]
        density_min: Option<u32>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        emb_dim: Option<usize>,
        #[arg(long)]
        hidden: Option<usize>,
        /// Prefix for the split tensors and manifest.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit one model kind and write a checkpoint.
    Train {
        #[arg(long)]
        model: ModelKind,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        val: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a checkpoint on a test tensor.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a full study.
    Experiment {
        kind: ExperimentKind,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Embed an activation table with t-SNE.
    Project {
        #[arg(long)]
        activations: PathBuf,
        /// Second window's table, embedded jointly and joined by patient.
        #[arg(long)]
        activations2: Option<PathBuf>,
        #[arg(long, default_value_t = 30.0)]
        perplexity: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cmd: Command) -> seqrisk::Result<()> {
    match cmd {
        Command::Generate { config, out_dir } => commands::generate(&GenerateArgs { config, out_dir }).map(drop),
        Command::Prepare {
            events,
            patients,
            window,
            binarize,
            density_min,
            config,
            emb_dim,
            hidden,
            out,
        } => commands::prepare(&PrepareArgs {
            events,
            patients,
            window,
            binarize,
            density_min,
            config,
            emb_dim,
            hidden,
            out,
        })
        .map(drop),
        Command::Train {
            model,
            train,
            val,
            seed,
            config,
            out,
        } => commands::train(&TrainArgs {
            model,
            train,
            val,
            seed,
            config,
            out,
        })
        .map(drop),
        Command::Evaluate { model, test, out } => {
            commands::evaluate_checkpoint(&EvaluateArgs { model, test, out }).map(drop)
        }
        Command::Experiment { kind, config, out_dir } => {
            commands::experiment(&ExperimentArgs { kind, config, out_dir }).map(drop)
        }
        Command::Project {
            activations,
            activations2,
            perplexity,
            seed,
            iterations,
            out,
        } => commands::project(&ProjectArgs {
            activations,
            paired: activations2,
            perplexity,
            seed,
            iterations,
            out,
        })
        .map(drop),
    }
}

fn fail(kind: &str, message: &str) -> ExitCode {
    eprintln!("{}", serde_json::json!({ "error": kind, "message": message }));
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            return fail("usage", first);
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e.kind(), &e.to_string()),
    }
}
