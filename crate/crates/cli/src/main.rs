mod commands;
mod config;
mod report;
mod validate;

use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use commands::Outcome;
use config::{resolve, Params};
use report::{ResultEntry, RunReport, Seeds};
use vmperc::{Error, Result};

/// Batch experiments on stationary voter-model measures.
#[derive(Parser)]
#[command(name = "vmperc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Window occupation density.
    Density(Params),
    /// Two-point correlation against the hitting probability.
    Corr(Params),
    /// Joint occupation of a finite site set.
    Joint(Params),
    /// Annihilating-walk comparison inequalities.
    Couple(Params),
    /// Crossing probability curves from per-structure thresholds.
    Crossing(Params),
    /// Per-structure crossing thresholds.
    Threshold(Params),
    /// Finite-size scan of threshold quantiles.
    Scan(Params),
    /// Lattice Green function, hitting probabilities and tables.
    Green(Params),
    /// Heat-kernel and Green-function bound checks.
    Bounds(Params),
    /// Bottom-scale event inclusion test.
    Claim64(Params),
    /// Tree embeddings and admissible pairs.
    #[command(subcommand)]
    Renorm(Renorm),
    /// Invariant suite at desk scale.
    Validate(Params),
}

#[derive(Subcommand)]
enum Renorm {
    Count(Params),
    Enumerate(Params),
    Extract(Params),
    Admissible(Params),
}

impl Command {
    fn split(self) -> (&'static str, Params) {
        match self {
            Command::Density(p) => ("density", p),
            Command::Corr(p) => ("corr", p),
            Command::Joint(p) => ("joint", p),
            Command::Couple(p) => ("couple", p),
            Command::Crossing(p) => ("crossing", p),
            Command::Threshold(p) => ("threshold", p),
            Command::Scan(p) => ("scan", p),
            Command::Green(p) => ("green", p),
            Command::Bounds(p) => ("bounds", p),
            Command::Claim64(p) => ("claim64", p),
            Command::Renorm(Renorm::Count(p)) => ("renorm-count", p),
            Command::Renorm(Renorm::Enumerate(p)) => ("renorm-enumerate", p),
            Command::Renorm(Renorm::Extract(p)) => ("renorm-extract", p),
            Command::Renorm(Renorm::Admissible(p)) => ("renorm-admissible", p),
            Command::Validate(p) => ("validate", p),
        }
    }
}

fn dispatch(command: &str, p: &Params) -> Result<Outcome> {
    match command {
        "density" => commands::density(p),
        "corr" => commands::corr(p),
        "joint" => commands::joint(p),
        "couple" => commands::couple(p),
        "crossing" => commands::crossing(p),
        "threshold" => commands::threshold(p),
        "scan" => commands::scan(p),
        "green" => commands::green(p),
        "bounds" => commands::bounds(p),
        "claim64" => commands::claim64(p),
        "renorm-count" => commands::renorm_count(p),
        "renorm-enumerate" => commands::renorm_enumerate(p),
        "renorm-extract" => commands::renorm_extract(p),
        "renorm-admissible" => commands::renorm_admissible(p),
        "validate" => run_validate(p),
        _ => unreachable!(),
    }
}

fn run_validate(p: &Params) -> Result<Outcome> {
    let checks = validate::run(p.seed()?, p.green_table.as_deref(), p.range()?, p.only.as_deref());
    if checks.is_empty() {
        return Err(config::bad("no validate check matches --only"));
    }
    let passed = checks.iter().filter(|c| c.pass).count();
    let failure = checks.iter().find(|c| !c.pass).map(|c| format!("{} failed: {}", c.name, c.detail));
    Ok(Outcome {
        results: vec![ResultEntry::exact("checks_passed", passed), ResultEntry::exact("checks_total", checks.len())],
        details: json!(checks),
        failure,
        ..Outcome::default()
    })
}

fn run(command: &str, flags: &Params) -> Result<Option<String>> {
    let resolved = resolve(command, flags)?;
    let p = &resolved.params;
    let start = Instant::now();
    let outcome = dispatch(command, p)?;
    // validate reports are byte-identical by contract
    let wall = if p.reproducible == Some(true) || command == "validate" { 0.0 } else { start.elapsed().as_secs_f64() };
    if let (Some(t), Some(path)) = (&outcome.table, &p.out) {
        t.write(path, p.format())?;
    }
    if let Some((path, t)) = &outcome.extra {
        t.write(path, p.format())?;
    }
    let report = RunReport {
        config: resolved.echo,
        results: outcome.results,
        seeds: Seeds { root: p.seed, per_replica_rule: vmperc::rng::PER_REPLICA_RULE },
        wall_time_s: wall,
        version: vmperc::VERSION,
        details: outcome.details,
    };
    report.write(p.report.as_deref())?;
    Ok(outcome.failure)
}

/// Worker count from the environment; `None` leaves rayon's default.
fn threads_from_env(value: Option<String>) -> std::result::Result<Option<usize>, String> {
    match value {
        None => Ok(None),
        Some(v) => match v.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("{} must be a positive integer, got {v:?}", vmperc::rng::THREADS_ENV)),
        },
    }
}

/// Parses `args`, runs the subcommand and returns the process exit code.
fn run_cli<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code() as u8;
        }
    };
    let (command, flags) = cli.command.split();
    match run(command, &flags) {
        Ok(None) => 0,
        Ok(Some(msg)) => {
            eprintln!("failed: {msg}");
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::NoCandidate { .. } | Error::Io(_) => 1,
                _ => 2,
            }
        }
    }
}

fn main() -> ExitCode {
    match threads_from_env(std::env::var(vmperc::rng::THREADS_ENV).ok()) {
        Ok(Some(n)) => {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        Ok(None) => {}
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    }
    ExitCode::from(run_cli(std::env::args_os()))
}

#[cfg(test)]
mod tests;
