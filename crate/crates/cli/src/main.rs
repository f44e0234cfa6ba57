//! `volterra`: sample, simulate and cross-check discretized Volterra kernels.

mod commands;
mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use commands::{CompareArgs, ConventionArg, Form, Mode, Output, Source, DEFAULT_TOLERANCE};
use config::Memory;

#[derive(Parser)]
#[command(name = "volterra", version, about)]
struct Cli {
    /// Experiment configuration (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Write output here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Seed for a random input, overriding the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print v_p, the raw sampled kernel and its multiplicity factor at one index.
    SampleKernel {
        #[arg(long)]
        order: Option<usize>,
        /// Comma-separated lags.
        #[arg(long, value_delimiter = ',', required = true)]
        index: Vec<usize>,
        #[arg(long, visible_alias = "convention", value_enum, default_value = "regular")]
        form: Form,
    },
    /// Run a discrete realization and write y_p(n) as CSV.
    Simulate {
        #[arg(long)]
        order: Option<usize>,
        #[arg(long, value_enum, default_value = "corrected")]
        mode: Mode,
    },
    /// Evaluate the truncated kernel sum directly.
    Oracle {
        #[arg(long)]
        order: Option<usize>,
        #[arg(long, value_enum, default_value = "regular")]
        form: Form,
        /// Truncation length, or "auto".
        #[arg(long)]
        memory: Option<Memory>,
    },
    /// Compare two realizations sample by sample.
    Compare {
        #[arg(long)]
        order: Option<usize>,
        #[arg(long, value_enum, default_value = "corrected")]
        left: Source,
        #[arg(long, value_enum, default_value = "oracle-regular")]
        right: Source,
        #[arg(long)]
        memory: Option<Memory>,
        /// Maximum relative error before exiting with status 1.
        #[arg(long)]
        tolerance: Option<f64>,
    },
    /// Simulate the continuous system driven by an impulse train and split
    /// the response into homogeneous orders.
    Ctsim {
        /// Highest order to extract.
        #[arg(long)]
        order: Option<usize>,
        /// Comma-separated input amplitudes.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        epsilons: Option<Vec<f64>>,
    },
    /// Predicted against measured extra multiplications per sample.
    Complexity {
        #[arg(long)]
        order: Option<usize>,
        #[arg(long, value_enum, default_value = "both")]
        convention: ConventionArg,
    },
}

fn run(cli: Cli) -> Result<Output> {
    let path = cli.config.as_deref().context("--config is required")?;
    let cfg = config::load(path)?;
    let seed = cli.seed;
    let memory = |flag: Option<Memory>| flag.unwrap_or(cfg.config.memory);
    // without --order, the highest order the config lists
    let pick_order = |flag: Option<usize>| {
        flag.or_else(|| cfg.config.orders.iter().copied().max()).context("--order is required (config lists no orders)")
    };
    let output = match cli.command {
        Command::SampleKernel { order, index, form } => {
            commands::sample_kernel(&cfg, pick_order(order)?, &index, form)?
        }
        Command::Simulate { order, mode } => commands::simulate(&cfg, pick_order(order)?, mode, seed)?,
        Command::Oracle { order, form, memory: m } => {
            commands::oracle(&cfg, pick_order(order)?, form, memory(m), seed)?
        }
        Command::Compare { order, left, right, memory: m, tolerance } => commands::compare(
            &cfg,
            &CompareArgs {
                order: pick_order(order)?,
                left,
                right,
                memory: memory(m),
                tolerance: tolerance.or(cfg.config.tolerance).unwrap_or(DEFAULT_TOLERANCE),
                seed,
            },
        )?,
        Command::Ctsim { order, epsilons } => commands::ctsim(&cfg, pick_order(order)?, epsilons, seed)?,
        Command::Complexity { order, convention } => commands::complexity(&cfg, pick_order(order)?, convention, seed)?,
    };

    match cli.out.or_else(|| cfg.config.out.as_ref().map(|p| cfg.resolve(p))) {
        Some(out) => std::fs::write(&out, &output.body).with_context(|| format!("writing {}", out.display()))?,
        None => std::io::stdout().write_all(&output.body)?,
    }
    Ok(output)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(out) if out.failed => ExitCode::from(1),
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
