//! `fluxfit`: simulate fluxonium spectra, synthesize and reduce two-tone
//! scans, fit spectra and tabulate phase offsets.
//!
//! Units at the boundary: energies and frequencies in GHz, inductances in
//! nH, capacitances in fF, phases in radians or, in `_over_pi` columns and
//! flags, in units of π.

mod cmd;
mod config;
mod io;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::manifest::Status;

#[derive(Parser, Debug)]
#[command(name = "fluxfit", version, about, long_about = None)]
struct Cli {
    /// JSON file with option defaults; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory; every file a command writes goes under it.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Seed for synthetic noise and multistart draws.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Transition frequencies (and optionally levels and potentials) vs phi_ext.
    Simulate(cmd::simulate::Args),
    /// Synthetic two-tone scan with Lorentzian lines along model transitions.
    Synth(cmd::synth::Args),
    /// Extremum markers of a scan, optionally labeled by model transitions.
    Peaks(cmd::peaks::Args),
    /// Simultaneous fit of one or more labeled peak sets.
    Fit(cmd::fit::Args),
    /// Phase-offset table from a directory of fit results.
    Phi0(cmd::phi0::Args),
    /// Re-run a command from its manifest and check the outputs match.
    Replay(cmd::replay::Args),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot set up {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let file = match cli.config.as_deref().map(config::load).transpose() {
        Ok(f) => f,
        Err(e) => return report(e),
    };
    let global = config::Global { out: cli.out, seed: cli.seed, threads: cli.threads, file };
    let result = match &cli.command {
        Command::Simulate(a) => cmd::simulate::run(&global, a),
        Command::Synth(a) => cmd::synth::run(&global, a),
        Command::Peaks(a) => cmd::peaks::run(&global, a),
        Command::Fit(a) => cmd::fit::run(&global, a),
        Command::Phi0(a) => cmd::phi0::run(&global, a),
        Command::Replay(a) => cmd::replay::run(&global, a),
    };
    match result {
        Ok(Status::Success) => ExitCode::SUCCESS,
        Ok(Status::NotConverged) => ExitCode::from(3),
        Err(e) => report(e),
    }
}

fn report(e: anyhow::Error) -> ExitCode {
    eprintln!("error: {e:#}");
    ExitCode::from(manifest::exit_code(&e))
}
