//! `lrt-calibrate`: solve for the rescaling constant, run null simulations,
//! check separability, trace AMP and adjust LLR p-values from the shell.
//!
//! Exit codes: 0 success, 1 usage, 2 domain, 3 I/O or parse, 4 numerical
//! non-convergence.

mod commands;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use lrt_calibrate::links::Link;

use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "lrt-calibrate", version, about = "Rescaled likelihood-ratio tests for high-dimensional binary regression")]
struct Cli {
    /// Worker threads for simulate, curve and separability (default: available parallelism).
    #[arg(long, global = true, env = "LRT_CALIBRATE_WORKERS", value_parser = clap::value_parser!(u16).range(1..))]
    workers: Option<u16>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the system at one kappa and print {kappa, tau_star, b_star, alpha}.
    Solve {
        #[arg(long, default_value = "logistic")]
        model: Link,
        #[arg(long, allow_negative_numbers = true)]
        kappa: f64,
    },
    /// Solve on an evenly spaced kappa grid.
    Curve {
        #[arg(long, default_value = "logistic")]
        model: Link,
        #[arg(long, allow_negative_numbers = true)]
        kappa_min: f64,
        #[arg(long, allow_negative_numbers = true)]
        kappa_max: f64,
        #[arg(long, default_value_t = 9, value_parser = clap::value_parser!(u32).range(1..))]
        points: u32,
        /// CSV output `kappa,tau_star,b_star,alpha`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo under the global null; prints the JSON report.
    Simulate {
        #[arg(long, default_value_t = 200)]
        n: usize,
        #[arg(long, default_value_t = 60)]
        p: usize,
        #[arg(long, default_value_t = 400, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        /// gaussian, bernoulli, or toeplitz:<r> for rows with covariance r^|j-k|.
        #[arg(long, default_value = "gaussian")]
        design: String,
        #[arg(long, default_value = "logistic")]
        model: Link,
        /// all, or k for the first k coordinates.
        #[arg(long, default_value = "all")]
        coords: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory receiving report.json, pooled.csv and llr.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Append (or replace) a p_adjusted column in a CSV with a lambda column.
    Adjust {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "logistic")]
        model: Link,
        #[arg(long, allow_negative_numbers = true, required_unless_present_all = ["n", "p"], conflicts_with_all = ["n", "p"])]
        kappa: Option<f64>,
        #[arg(long, requires = "p")]
        n: Option<usize>,
        #[arg(long, requires = "n")]
        p: Option<usize>,
        /// Output CSV (default: stdout).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fraction of seeded Gaussian null datasets that are perfectly separable.
    Separability {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        p: usize,
        #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run AMP on a seeded Gaussian design and report the norm trajectory.
    Amp {
        #[arg(long, default_value_t = 4000)]
        n: usize,
        #[arg(long, default_value_t = 1200)]
        p: usize,
        #[arg(long, default_value_t = 25)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "logistic")]
        model: Link,
        /// CSV output `t,beta_norm_sq`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(w) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(w.into())
            .build_global()
            .map_err(|e| CliError::usage(format!("cannot start {w} workers: {e}")))?;
    }
    match cli.command {
        Command::Solve { model, kappa } => commands::solve(model, kappa),
        Command::Curve { model, kappa_min, kappa_max, points, out } => {
            commands::curve(model, kappa_min, kappa_max, points as usize, out.as_deref())
        }
        Command::Simulate { n, p, trials, design, model, coords, seed, out } => {
            commands::simulate(n, p, trials as usize, &design, model, &coords, seed, out.as_deref())
        }
        Command::Adjust { input, model, kappa, n, p, output } => {
            let kappa = match (kappa, n, p) {
                (Some(k), _, _) => k,
                (None, Some(n), Some(p)) if n > 0 => p as f64 / n as f64,
                _ => return Err(CliError::usage("give --kappa or both --n and --p with n > 0")),
            };
            commands::adjust(&input, model, kappa, output.as_deref())
        }
        Command::Separability { n, p, trials, seed } => commands::separability(n, p, trials as usize, seed),
        Command::Amp { n, p, iters, seed, model, out } => commands::amp(n, p, iters, seed, model, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(error::USAGE);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
