//! Command-line driver: each subcommand reads a TOML run config, writes CSV tables and a
//! resolved-config echo into the output directory, and prints a short summary. Orchestration
//! is single-threaded; replica-parallel work happens inside the library.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

mod commands;
mod config;
mod output;

use output::{Format, Sink};

#[derive(Parser)]
#[command(name = "wpi", version, about = "Convergence-rate bounds from weak functional inequalities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory for CSV tables and resolved-config echoes.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Overrides the seed recorded in the run config.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for replica-parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Also print tables to the terminal, or emit CSV only.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Tabulate the inverse rate induced by a coefficient from a config file.
    Rate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compose comparison links onto a base coefficient and tabulate the result.
    Chain {
        #[arg(long)]
        config: PathBuf,
    },
    /// Independence-sampler families: coefficient table, rate bound, decay overlay.
    Imh {
        #[arg(long)]
        config: PathBuf,
    },
    /// Noisy-acceptance chains: rates, mixing, budgets, and weight-model tails.
    #[command(subcommand)]
    Pm(PmCommand),
    /// Certify the bounds exactly on random finite chains; nonzero exit on violation.
    Verify {
        /// Number of random reversible chains to sweep.
        #[arg(long, default_value_t = 50)]
        chains: usize,
        /// Largest state-space dimension (cycled from 2).
        #[arg(long, default_value_t = 10)]
        dim_max: usize,
        /// Largest step count checked per chain.
        #[arg(long, default_value_t = 200)]
        n_max: u64,
        /// Halve every coefficient first; the sweep must then report violations.
        #[arg(long)]
        sabotage: bool,
    },
}

#[derive(Subcommand)]
enum PmCommand {
    /// Lognormal weights over a spectral-gap marginal: numeric and closed-form rates.
    LognormalRate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Steps needed to bring the inverse rate below a squared accuracy target.
    Mixing {
        #[arg(long)]
        config: PathBuf,
    },
    /// Split a simulation budget: noise level, particle count, step count.
    Budget {
        #[arg(long)]
        config: PathBuf,
    },
    /// Asymptotic-variance prefactor over a noise-level grid.
    AvarCurve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Hit-frequency weight model: tail envelope and optional chained rate.
    Abc {
        #[arg(long)]
        config: PathBuf,
    },
    /// Product-of-averages weight model: sample-size check, tail, optional rate.
    Product {
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<bool> {
    let sink = Sink::new(&cli.out, cli.format)?;
    match &cli.command {
        Command::Rate { config } => commands::rate::run(config, &sink, cli.seed).map(|()| true),
        Command::Chain { config } => commands::chain::run(config, &sink, cli.seed).map(|()| true),
        Command::Imh { config } => commands::imh::run(config, &sink, cli.seed).map(|()| true),
        Command::Pm(pm) => match pm {
            PmCommand::LognormalRate { config } => commands::pm::lognormal_rate(config, &sink, cli.seed),
            PmCommand::Mixing { config } => commands::pm::mixing(config, &sink, cli.seed),
            PmCommand::Budget { config } => commands::pm::budget(config, &sink, cli.seed),
            PmCommand::AvarCurve { config } => commands::pm::avar_curve(config, &sink, cli.seed),
            PmCommand::Abc { config } => commands::pm::abc(config, &sink, cli.seed),
            PmCommand::Product { config } => commands::pm::product(config, &sink, cli.seed),
        }
        .map(|()| true),
        Command::Verify { chains, dim_max, n_max, sabotage } => {
            let args = commands::verify::VerifyArgs {
                chains: *chains,
                dim_max: *dim_max,
                n_max: *n_max,
                sabotage: *sabotage,
            };
            commands::verify::run(&args, &sink, cli.seed)
        }
    }
}
