//! `pumpsched`: pump-scheduling and storage-level optimization workflow.
//!
//! Subcommands mirror the pipeline: `validate` a model file, `generate`
//! simulator training data, `train` the meta-model, `optimize` a schedule
//! with the GA, and `verify` a schedule against the ground-truth simulator.
//!
//! Exit codes: 0 success, 1 validation/usage error, 2 runtime error.

mod commands;
mod manifest;
mod schedule_io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliErrorKind {
    /// Bad input: malformed files, broken invariants, wrong flags.
    Usage,
    /// Failure while running: I/O, divergence.
    Runtime,
}

#[derive(Debug)]
pub struct CliError {
    pub kind: CliErrorKind,
    pub message: String,
}

impl CliError {
    pub fn usage(message: String) -> Self {
        Self {
            kind: CliErrorKind::Usage,
            message,
        }
    }

    pub fn runtime(message: String) -> Self {
        Self {
            kind: CliErrorKind::Runtime,
            message,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self.kind {
            CliErrorKind::Usage => 1,
            CliErrorKind::Runtime => 2,
        }
    }
}

impl From<pumpsched::Error> for CliError {
    fn from(e: pumpsched::Error) -> Self {
        if e.is_input_error() {
            CliError::usage(e.to_string())
        } else {
            CliError::runtime(e.to_string())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Optimize pump/valve operation only; every tank starts from its
    /// fixed operating level.
    ScheduleOnly,
    /// Concurrent scheduling and storage optimization: every tank's
    /// initial level joins the decision variables.
    ScheduleAndStorage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    /// Trained meta-model (fast path).
    Meta,
    /// Direct hydraulic simulator (verification path).
    Simulator,
}

#[derive(Parser)]
#[command(name = "pumpsched", version, about = "Pump scheduling and storage level optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a network model file against every structural invariant.
    Validate {
        #[arg(long)]
        model: PathBuf,
    },
    /// Sample random schedules through the simulator and write per-target
    /// training CSVs.
    Generate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one sub-ANN per target from a dataset directory and write the
    /// meta-model file.
    Train {
        #[arg(long)]
        model: PathBuf,
        /// Directory holding the per-target CSVs from `generate`.
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Hidden layer width.
        #[arg(long, default_value_t = 8)]
        hidden: usize,
        /// Inputs kept per target after the sensitivity screen.
        #[arg(long = "top-k", default_value_t = 4)]
        top_k: usize,
        #[arg(long = "learning-rate", default_value_t = 0.05)]
        learning_rate: f64,
        #[arg(long, default_value_t = 500)]
        epochs: usize,
        #[arg(long = "batch-size", default_value_t = 32)]
        batch_size: usize,
        #[arg(long = "validation-fraction", default_value_t = 0.2)]
        validation_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Search pump schedules (and optionally initial tank levels) with the
    /// genetic algorithm.
    Optimize {
        #[arg(long)]
        model: PathBuf,
        /// Meta-model file; required unless --backend simulator.
        #[arg(long)]
        meta: Option<PathBuf>,
        /// Constraint file; defaults to the constraints encoded on the model.
        #[arg(long)]
        constraints: Option<PathBuf>,
        /// GA parameter file; defaults to the reference configuration.
        #[arg(long = "ga-config")]
        ga_config: Option<PathBuf>,
        #[arg(long, value_enum)]
        mode: Mode,
        #[arg(long, value_enum, default_value_t = Backend::Meta)]
        backend: Backend,
        /// Overrides the seed from the GA config file.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay a schedule through the simulator, recompute its fitness and
    /// report meta-model discrepancies and switch counts.
    Verify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        schedule: PathBuf,
        /// Predicted-trajectory CSV to compare against; defaults to
        /// `predicted_trajectory.csv` next to the schedule, if present.
        #[arg(long)]
        predicted: Option<PathBuf>,
        #[arg(long)]
        constraints: Option<PathBuf>,
        /// Simulation sub-step in minutes; must divide the control interval.
        #[arg(long = "step-minutes", default_value_t = 60)]
        step_minutes: u32,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { model } => commands::validate(&model),
        Command::Generate {
            model,
            samples,
            seed,
            out,
        } => commands::generate(&model, samples, seed, &out),
        Command::Train {
            model,
            data,
            out,
            hidden,
            top_k,
            learning_rate,
            epochs,
            batch_size,
            validation_fraction,
            seed,
        } => commands::train(
            &model,
            &data,
            &out,
            commands::TrainOptions {
                hidden,
                top_k,
                learning_rate,
                epochs,
                batch_size,
                validation_fraction,
                seed,
            },
        ),
        Command::Optimize {
            model,
            meta,
            constraints,
            ga_config,
            mode,
            backend,
            seed,
            out,
        } => commands::optimize(
            &model,
            meta.as_deref(),
            constraints.as_deref(),
            ga_config.as_deref(),
            mode,
            backend,
            seed,
            &out,
        ),
        Command::Verify {
            model,
            schedule,
            predicted,
            constraints,
            step_minutes,
            out,
        } => commands::verify(
            &model,
            &schedule,
            predicted.as_deref(),
            constraints.as_deref(),
            step_minutes,
            &out,
        ),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.exit_code())
        }
    }
}
