//! Command-line front end: one subcommand per experiment kind, each driven
//! by a TOML scenario. The subcommand overrides the scenario's experiment
//! kind, `--out`, `--seed` and `--threads` override the corresponding
//! scenario fields.
//!
//! Exit codes: 0 success, 2 validation failure, 3 numerical failure,
//! 4 I/O failure.

use crate::error::Error;
use crate::scenario::{execute, parse_scenario, ExperimentKind};
use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "lamethermo", version, about = "Thermoelastic system laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Scenario TOML file.
    #[arg(long, global = true)]
    pub scenario: Option<PathBuf>,

    /// Output directory (overrides the scenario).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker pool size (0 = library default).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    /// Seed override.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
pub enum Command {
    /// Integrate one trajectory and emit the diagnostic table.
    Run,
    /// Build the constant ledger.
    Constants,
    /// Check the structural assumptions.
    Assumptions,
    /// Absorbing-set verification over an ensemble.
    Absorbing,
    /// Ensemble attractor approximation with a decay series.
    Attractor,
    /// Contraction-functional test on a geometric sequence.
    Contraction,
    /// Operator and integrator refinement orders.
    Convergence,
}

impl Command {
    fn kind(self) -> ExperimentKind {
        match self {
            Command::Run => ExperimentKind::Run,
            Command::Constants => ExperimentKind::Constants,
            Command::Assumptions => ExperimentKind::Assumptions,
            Command::Absorbing => ExperimentKind::Absorbing,
            Command::Attractor => ExperimentKind::Attractor,
            Command::Contraction => ExperimentKind::Contraction,
            Command::Convergence => ExperimentKind::Convergence,
        }
    }
}

pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Validation { .. } | Error::ScenarioRejected(_) | Error::ConfigParse(_) => 2,
        Error::Io(_) | Error::Snapshot(_) => 4,
        _ => 3,
    }
}

/// Parse arguments, run the experiment, report the outcome; returns the
/// process exit code.
pub fn run_cli() -> i32 {
    let cli = Cli::parse();
    run_parsed(cli)
}

pub fn run_parsed(cli: Cli) -> i32 {
    let Some(path) = cli.scenario.as_deref() else {
        eprintln!("error: --scenario <path> is required");
        return 2;
    };
    let mut scenario = match parse_scenario(path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return exit_code_for(&e);
        }
    };
    scenario.experiment.kind = cli.command.kind();
    scenario.file.experiment.kind = cli.command.kind();
    if let Some(seed) = cli.seed {
        scenario.seed = seed;
        scenario.file.seed = seed;
    }
    match execute(&scenario, cli.out.as_deref(), cli.threads) {
        Ok(summary) => {
            println!(
                "{}: ok (artifacts in {})",
                summary.experiment,
                cli.out
                    .as_deref()
                    .unwrap_or(&scenario.output_dir)
                    .display()
            );
            0
        }
        Err(e) => {
            eprintln!("error in stage {:?}: {e}", cli.command);
            exit_code_for(&e)
        }
    }
}
