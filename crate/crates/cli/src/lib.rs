//! Command-line front end: parses a [`RunConfig`], runs one command's checks
//! and writes a versioned JSON report plus a text rendering.

pub mod report;
pub mod suites;

use clap::{Parser, ValueEnum};
use report::{Report, Timing};
use serde_json::json;
use std::fmt;
use std::path::PathBuf;
use std::time::Instant;
use towerforge::par;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFICATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_GUARD: i32 = 3;

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "TOWERFORGE_THREADS";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Filtration,
    Projectors,
    Subgroups,
    WedgeCheck,
    CongruencePlans,
    RingDichotomy,
    RingSplit,
    LiftSearch,
    PropertyP,
    VerifyAll,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Filtration => "filtration",
            Command::Projectors => "projectors",
            Command::Subgroups => "subgroups",
            Command::WedgeCheck => "wedge-check",
            Command::CongruencePlans => "congruence-plans",
            Command::RingDichotomy => "ring-dichotomy",
            Command::RingSplit => "ring-split",
            Command::LiftSearch => "lift-search",
            Command::PropertyP => "property-p",
            Command::VerifyAll => "verify-all",
        }
    }
}

#[derive(Clone, Debug, Parser)]
#[command(name = "towerforge", version, about = "Exact checks on finite groups, modules, subspace families and local rings")]
pub struct RunConfig {
    #[arg(long, value_enum)]
    pub command: Command,
    /// Input file, or `fixture:NAME` for a shipped ring. Repeatable.
    #[arg(long)]
    pub input: Vec<String>,
    /// Report path. The text report goes next to it with a `.txt` extension
    /// and timings to `<output>.timing.json`.
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub p: Option<u32>,
    #[arg(long)]
    pub n: Option<u64>,
    /// Ramification index for property-p.
    #[arg(long)]
    pub e: Option<u64>,
    /// Residue field size for property-p.
    #[arg(long)]
    pub q: Option<u64>,
    /// Tameness for property-p (defaults to `e > 1` being tame).
    #[arg(long)]
    pub tame: Option<bool>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Upper bound on any enumeration or search the command sets up. It can
    /// only tighten the built-in limits.
    #[arg(long)]
    pub guard_max: Option<u128>,
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        RunConfig {
            command,
            input: Vec::new(),
            output: None,
            p: None,
            n: None,
            e: None,
            q: None,
            tame: None,
            seed: 0,
            guard_max: None,
        }
    }

    /// The part of the configuration recorded in the report.
    fn describe(&self) -> serde_json::Value {
        json!({
            "input": self.input,
            "p": self.p,
            "n": self.n,
            "e": self.e,
            "q": self.q,
            "tame": self.tame,
            "seed": self.seed,
            "guard_max": self.guard_max.map(|g| g.to_string()),
        })
    }

    /// Fails with a guard error when `needed` exceeds `--guard-max`.
    pub fn guard(&self, what: &str, needed: u128) -> Result<(), CliError> {
        match self.guard_max {
            Some(limit) if needed > limit => Err(CliError::Guard(format!(
                "{what} needs {needed}, --guard-max is {limit}"
            ))),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Input(String),
    Guard(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) | CliError::Io(_) => EXIT_INPUT,
            CliError::Guard(_) => EXIT_GUARD,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::Guard(m) => write!(f, "size guard: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<towerforge::Error> for CliError {
    fn from(e: towerforge::Error) -> Self {
        match e {
            towerforge::Error::Guard { .. } => CliError::Guard(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

pub struct Outcome {
    pub report: Report,
    pub timing: Timing,
    pub json: String,
    pub text: String,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.report.all_passed() {
            EXIT_OK
        } else {
            EXIT_VERIFICATION
        }
    }
}

fn thread_cap() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| CliError::Input(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

/// Runs the command and writes the report files when `--output` is set.
pub fn run(config: &RunConfig) -> Result<Outcome, CliError> {
    let threads = thread_cap()?;
    let start = Instant::now();
    let recorded = par::with_threads(threads, || suites::dispatch(config))?;
    let report = Report::new(config.command.name(), config.describe(), recorded.checks);
    let timing = Timing {
        command: config.command.name().to_string(),
        total_ms: start.elapsed().as_secs_f64() * 1e3,
        checks: recorded.timings,
    };
    let (json, text) = report::emit_report(&report, Some(&timing), config.output.as_deref())
        .map_err(|e| CliError::Io(e.to_string()))?;
    Ok(Outcome {
        report,
        timing,
        json,
        text,
    })
}
