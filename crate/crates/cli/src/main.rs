//! `atd`: simulate scenes, decompose tensors, score and tune.

mod commands;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use atd_core::eval::DEFAULT_TAU;
use clap::{Args, Parser, Subcommand};

use commands::SolverOverrides;

#[derive(Parser)]
#[command(name = "atd", version, about = "Additive tensor decomposition by consensus ADMM")]
struct Cli {
    /// Worker threads for data-parallel work (default: all cores).
    #[arg(long, global = true, env = "ATD_WORKERS")]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SolverFlags {
    /// Override admm.max_iters.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Override admm.stop_tol.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene with ground truth.
    Simulate {
        /// `crack` or `hotspot`.
        example: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write PGM slices of every tensor.
        #[arg(long)]
        pgm: bool,
    },
    /// Decompose a tensor as described by a problem config.
    Decompose {
        #[arg(long)]
        config: PathBuf,
        /// An .atd file or CSV slices (stacked along mode 1). Defaults to
        /// data.path in the config.
        #[arg(long, num_args = 1..)]
        input: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        solver: SolverFlags,
        /// Write PGM slices of every component.
        #[arg(long)]
        pgm: bool,
        /// Record the objective at every iteration in diagnostics.csv.
        #[arg(long)]
        diagnostics: bool,
    },
    /// Compare estimated components with ground truth.
    Evaluate {
        /// Estimated tensors in component order, or one decompose output
        /// directory.
        #[arg(long, num_args = 1.., required = true)]
        input: Vec<PathBuf>,
        /// Ground-truth tensors in component order, or one scene directory.
        #[arg(long, num_args = 1.., required = true)]
        truth: Vec<PathBuf>,
        /// Support threshold.
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: f64,
        /// Also write the metrics CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Grid-search penalty weights on scenes with ground truth.
    Tune {
        /// Problem config used as the template.
        #[arg(long)]
        config: PathBuf,
        /// Scene directories written by `simulate`.
        #[arg(long = "scene", num_args = 1.., required = true)]
        scenes: Vec<PathBuf>,
        /// `<component>.<term>=v1,v2,..`; repeat for more axes.
        #[arg(long, required = true)]
        grid: Vec<String>,
        /// Per-component losses, e.g. `ignore,zero_one` (default: zero_one).
        #[arg(long)]
        loss: Option<String>,
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: f64,
        /// Directory for scores.csv and best.toml.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        solver: SolverFlags,
    },
    /// Write slices of .atd tensors as PGM images.
    Export {
        #[arg(long, num_args = 1.., required = true)]
        input: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Mode to slice along.
        #[arg(long, default_value_t = 1)]
        mode: usize,
    },
}

fn run(cli: Cli, workers: usize) -> error::Result<()> {
    match cli.command {
        Command::Simulate { example, seed, out, pgm } => commands::simulate(&example, seed, &out, pgm),
        Command::Decompose {
            config,
            input,
            out,
            solver,
            pgm,
            diagnostics,
        } => commands::decompose(commands::DecomposeArgs {
            config: &config,
            inputs: &input,
            out: &out,
            overrides: SolverOverrides {
                max_iters: solver.max_iters,
                tol: solver.tol,
                record_objective: diagnostics,
            },
            pgm,
            workers,
        }),
        Command::Evaluate { input, truth, tau, out } => commands::evaluate(&input, &truth, tau, out.as_deref()),
        Command::Tune {
            config,
            scenes,
            grid,
            loss,
            tau,
            out,
            solver,
        } => commands::tune(commands::TuneArgs {
            config: &config,
            scenes: &scenes,
            grid: &grid,
            losses: loss.as_deref(),
            tau,
            out: out.as_deref(),
            overrides: SolverOverrides {
                max_iters: solver.max_iters,
                tol: solver.tol,
                record_objective: false,
            },
        }),
        Command::Export { input, out, mode } => commands::export(&input, &out, mode),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = match cli.workers {
        Some(0) => {
            eprintln!("atd: --workers must be at least 1");
            return ExitCode::from(2);
        }
        Some(n) => n,
        None => std::thread::available_parallelism().map_or(1, |n| n.get()),
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("atd: cannot start worker pool: {e}");
            return ExitCode::from(4);
        }
    };
    match pool.install(|| run(cli, workers)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("atd: {e}");
            e.exit_code()
        }
    }
}

