use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use attacklab::cli;

#[derive(Parser)]
#[command(name = "attacklab", version, about = "Attack-set selection for consensus networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Select an attack set under the budget.
    Select {
        #[arg(long)]
        config: PathBuf,
        /// greedy | greedy-improved | brute | random | degree
        #[arg(long)]
        algorithm: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check monotonicity and submodularity of the convergence error.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// exhaustive | sampled
        #[arg(long)]
        mode: String,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate attacked and clean trajectories.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated initial state, or a file containing one.
        #[arg(long, allow_hyphen_values = true)]
        x0: String,
        /// Attacked agents, e.g. 1+2 (empty for none).
        #[arg(long, default_value = "")]
        set: String,
        /// Keep every k-th integration step.
        #[arg(long, default_value_t = 100)]
        record_every: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Regenerate the CSV data of a reference experiment.
    Reproduce {
        /// table1 | example1 | example2 | fig3 | fig4 | fig5 | fig7
        #[arg(long)]
        preset: String,
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let code = match cli.command {
        Command::Select { config, algorithm, seed, out } => cli::cmd_select(&config, &algorithm, seed, &out),
        Command::Verify { config, mode, samples, seed, out } => cli::cmd_verify(&config, &mode, samples, seed, &out),
        Command::Simulate { config, x0, set, record_every, out } => {
            cli::cmd_simulate(&config, &x0, &set, record_every, &out)
        }
        Command::Reproduce { preset, out_dir } => cli::cmd_reproduce(&preset, &out_dir),
    };
    ExitCode::from(code as u8)
}
