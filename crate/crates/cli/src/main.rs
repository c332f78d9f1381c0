//! `sle-wedge`: exponent tables, the slit map, Loewner Monte Carlo, lattice
//! walks and the verification suite from the command line.
//!
//! Data goes to stdout, or with `--out DIR` into files next to a
//! `manifest.json`. Logs and warnings go to stderr.

mod commands;
mod config;
mod error;
mod exponent;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{SawCommand, SleAvoidArgs, VerifyArgs, WedgeMapArgs};
use crate::config::Config;
use crate::error::CliError;
use crate::exponent::ExponentArgs;
use crate::manifest::{deliver, now};

#[derive(Debug, Parser)]
#[command(
    name = "sle-wedge",
    version,
    about = "Wedge exponents of SLE(κ,ρ) and self-avoiding walks"
)]
struct Cli {
    /// Write outputs and a manifest into this directory instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cap on parallel threads (0 = all cores)
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate an exponent formula or sweep it along one parameter
    Exponent(ExponentArgs),
    /// Tabulate z₀, Φ'(0) and the predicted avoidance probability over R
    WedgeMap(WedgeMapArgs),
    /// Monte Carlo probability that an SLE trace avoids a wedge ray
    SleAvoid(SleAvoidArgs),
    /// Self-avoiding walk enumeration and pivot sampling
    Saw {
        #[command(subcommand)]
        command: SawCommand,
    },
    /// Run the acceptance checks
    Verify(VerifyArgs),
}

fn run(cli: Cli) -> Result<(), CliError> {
    let started = now();
    let cfg = Config::from_env()?;
    let workers = cfg.pick(cli.workers, "general", "workers", 0)?;
    if workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| CliError::Domain(format!("cannot size the thread pool: {e}")))?;
    }
    let dir = cli.out.as_deref();
    let mut failed = None;
    let output = match &cli.command {
        Command::Exponent(a) => exponent::run(a)?,
        Command::WedgeMap(a) => commands::wedge_map(a, &cfg)?,
        Command::SleAvoid(a) => {
            if a.dump_trace.is_some() && dir.is_none() {
                return Err(CliError::Usage(
                    "--dump-trace writes a file and needs --out".into(),
                ));
            }
            commands::sle_avoid(a, &cfg, workers)?
        }
        Command::Saw { command } => commands::saw(command, &cfg)?,
        Command::Verify(a) => {
            let (out, passed) = commands::verify(a)?;
            if !passed {
                failed = Some("one or more criteria failed".to_string());
            }
            out
        }
    };
    deliver(output, dir, started, cfg.path())?;
    match failed {
        Some(m) => Err(CliError::Verification(m)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("sle-wedge: {e}");
            if let CliError::Usage(_) = e {
                eprintln!("run `sle-wedge --help` for usage");
            }
            ExitCode::from(e.exit_code())
        }
    }
}
