//! `stap`: design driven trapping potentials that carry a quantum state
//! through a fast expansion or a condensate split without excitation, then
//! verify the design by direct propagation.

use std::process::ExitCode;

use clap::Parser;

mod config;
mod emit;
mod run;

use config::{CommonArgs, Scenario};

#[derive(Parser)]
#[command(
    name = "stap",
    version,
    about = "Shortcuts to adiabaticity: engineer time-dependent traps and \
             verify them by propagating the Schroedinger / Gross-Pitaevskii \
             equation under the synthesized potential",
    after_help = "Exit codes: 0 all gates pass, 1 gate failure (see \
                  report.json), 2 usage or config error, 3 numerical failure.\n\
                  Env: STAP_THREADS caps the worker thread count."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Engineer a fast harmonic-trap expansion and verify it end to end.
    Expand(CommonArgs),
    /// Drive one trapped cloud into two: the single-to-double-well split.
    Split(CommonArgs),
    /// Screen the rigid-scaling route to a quartic target for feasibility.
    QuarticCheck(CommonArgs),
    /// Run the pinned reference battery: every scenario, every gate.
    Verify(CommonArgs),
}

fn init_thread_cap() {
    if let Ok(raw) = std::env::var("STAP_THREADS") {
        match raw.trim().parse::<usize>() {
            Ok(n) if n >= 1 => {
                // Fails only if the global pool was already built; it never
                // is this early in main.
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!(
                "stap: warning: STAP_THREADS={raw:?} is not a positive integer; ignoring"
            ),
        }
    }
}

fn main() -> ExitCode {
    init_thread_cap();
    let cli = Cli::parse();
    let (scenario, args) = match &cli.command {
        Command::Expand(a) => (Scenario::Expand, a),
        Command::Split(a) => (Scenario::Split, a),
        Command::QuarticCheck(a) => (Scenario::QuarticCheck, a),
        Command::Verify(a) => (Scenario::Verify, a),
    };
    match config::resolve(scenario, args) {
        Ok(cfg) => run::run(&cfg),
        Err(e) => {
            eprintln!("stap: {e}");
            ExitCode::from(2)
        }
    }
}
