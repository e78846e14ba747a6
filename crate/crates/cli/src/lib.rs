//! Command-line front end: automaton files in, reports and files out.
//!
//! Exit status is 0 when the command succeeds and its property holds, 1 when
//! a checked property fails, 2 on usage, parse or I/O errors.

pub mod commands;
pub mod error;
pub mod scenario;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use error::CliError;
pub use scenario::{parse_scenario, parse_scenario_str, write_scenario, ScenarioError};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "polaris",
    version,
    about = "Supervisory control and formation simulation toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parallel composition of two automata.
    Compose {
        a: PathBuf,
        b: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Natural projection onto the kept events.
    Project {
        a: PathBuf,
        /// Comma-separated events, or @FILE.
        #[arg(long)]
        keep: String,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Strong bisimulation; exits 1 with a counterexample when it fails.
    Bisim { a: PathBuf, b: PathBuf },
    /// Controllability of a specification; several plants are composed first.
    CheckControllable {
        #[arg(long = "plant", required = true)]
        plants: Vec<PathBuf>,
        #[arg(long)]
        spec: PathBuf,
        /// Uncontrollable events; defaults to those marked in the plant.
        #[arg(long)]
        uncontrollable: Option<String>,
    },
    /// Decomposability into two local views. Event sets default to the owner tags.
    CheckDecomposable {
        a: PathBuf,
        #[arg(long)]
        events1: Option<String>,
        #[arg(long)]
        events2: Option<String>,
        /// Exploration depth of the bounded DC3 check.
        #[arg(long, default_value_t = polaris_core::synthesis::DEFAULT_DC3_BOUND)]
        bound: usize,
        /// Also write the two projections as local1.aut and local2.aut.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Writes plant, formation and collision automata for a partition.
    BuildModels {
        /// R_m,n_r,n_theta
        #[arg(long, default_value = "50,6,9")]
        partition: String,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Runs a scenario and writes trajectory.csv, events.log and verdict.txt.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Checks that the decentralized closed loop is bisimilar to the specification.
    VerifyTheorem1 {
        #[arg(long)]
        plant1: PathBuf,
        #[arg(long)]
        plant2: PathBuf,
        #[arg(long)]
        controller: PathBuf,
        /// Defaults to the centralized loop `controller ‖ (plant1 ‖ plant2)`.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
}

pub fn dispatch(command: &Command, out: &mut dyn Write) -> Result<bool, CliError> {
    use commands::*;
    match command {
        Command::Compose { a, b, output } => compose(a, b, output, out),
        Command::Project { a, keep, output } => project(a, keep, output, out),
        Command::Bisim { a, b } => bisim(a, b, out),
        Command::CheckControllable {
            plants,
            spec,
            uncontrollable,
        } => check_controllable(plants, spec, uncontrollable.as_deref(), out),
        Command::CheckDecomposable {
            a,
            events1,
            events2,
            bound,
            output,
        } => check_decomposable(
            a,
            events1.as_deref(),
            events2.as_deref(),
            *bound,
            output.as_deref(),
            out,
        ),
        Command::BuildModels { partition, output } => build_models(partition, output, out),
        Command::Simulate { scenario, output } => simulate(scenario, output, out),
        Command::VerifyTheorem1 {
            plant1,
            plant2,
            controller,
            spec,
        } => verify_theorem1(plant1, plant2, controller, spec.as_deref(), out),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit status.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    match dispatch(&cli.command, out) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_FAIL,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// `POLARIS_LOG=debug|info|quiet`; anything else leaves warnings on.
pub fn init_logging() {
    let level = match std::env::var("POLARIS_LOG").as_deref() {
        Ok("debug") => log::LevelFilter::Debug,
        Ok("info") => log::LevelFilter::Info,
        Ok("quiet") => log::LevelFilter::Off,
        _ => log::LevelFilter::Warn,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .init();
}
