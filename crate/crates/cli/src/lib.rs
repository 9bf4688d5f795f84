//! Command-line experiments for the virtual wire testing machine.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod experiments;
mod output;
pub mod scenario;

use std::fmt;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

pub use output::Outputs;
pub use scenario::Scenario;

/// Malformed or inconsistent configuration; exits with status 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "configuration error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Compensate {
    On,
    Off,
    Both,
}

impl Compensate {
    pub fn modes(self) -> &'static [bool] {
        match self {
            Compensate::On => &[true],
            Compensate::Off => &[false],
            Compensate::Both => &[false, true],
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "wirebench",
    version,
    about = "Virtual wire testing machine experiments"
)]
pub struct Cli {
    /// Scenario file (TOML). Missing sections use built-in defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Master seed; overrides the scenario's.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Trials per efficiency setpoint.
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Relative sd of measurement noise.
    #[arg(long, global = true)]
    pub noise: Option<f64>,
    #[arg(long, global = true, value_enum, default_value = "both")]
    pub compensate: Compensate,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Pulley efficiency sweep over diameters, wires and tensions.
    Efficiency,
    /// Chirp runs of the linear loading unit, free and fixed.
    FreqResponse,
    /// Creep elongation over a pre-stretch schedule.
    Prestretch,
    /// End-effector force ramp with and without loss compensation.
    ForceControl,
    /// One tension distribution for a target end-effector force.
    Solve,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Efficiency => "efficiency",
            Command::FreqResponse => "freq-response",
            Command::Prestretch => "prestretch",
            Command::ForceControl => "force-control",
            Command::Solve => "solve",
        }
    }
}

/// Scenario after applying command-line overrides.
pub fn resolve_scenario(cli: &Cli) -> anyhow::Result<Scenario> {
    let mut s = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
            Scenario::from_toml_str(&text)?
        }
        None => Scenario::default(),
    };
    if let Some(seed) = cli.seed {
        s.seed = seed;
    }
    if let Some(t) = cli.trials {
        s.efficiency.trials = t;
    }
    if let Some(n) = cli.noise {
        s.efficiency.noise = n;
        s.force_control.noise = n;
    }
    s.validate()?;
    Ok(s)
}

pub fn config_hash(s: &Scenario) -> String {
    hex::encode(Sha256::digest(s.to_toml_string().as_bytes()))
}

/// Runs one subcommand and returns its plain-text report.
pub fn run(cli: &Cli) -> anyhow::Result<String> {
    let scenario = resolve_scenario(cli)?;
    let mut out = Outputs::new(
        &cli.out,
        cli.command.name(),
        &config_hash(&scenario),
        scenario.seed,
    )?;
    let report = match cli.command {
        Command::Efficiency => experiments::efficiency(&scenario, &mut out)?.report,
        Command::FreqResponse => experiments::freq_response(&scenario, &mut out)?.report,
        Command::Prestretch => experiments::prestretch(&scenario, &mut out)?.report,
        Command::ForceControl => {
            experiments::force_control(&scenario, cli.compensate, &mut out)?.report
        }
        Command::Solve => experiments::solve(&scenario, cli.compensate, &mut out)?.report,
    };
    let text = report.to_text();
    out.write(
        &format!("{}_report.txt", cli.command.name()),
        text.as_bytes(),
    )?;
    out.finish()?;
    Ok(text)
}

/// 2 for configuration errors, 3 for numerical failures, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<wirebench_core::Error>() {
            return match e {
                wirebench_core::Error::Config(_) => 2,
                e if e.is_numerical() => 3,
                _ => 1,
            };
        }
    }
    1
}
