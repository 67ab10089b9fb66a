//! `zlip`: orbit computation, single planner solves, closed-loop push
//! recovery, ablations and push sweeps from a TOML configuration.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{Format, RunConfig};
use error::CliError;
use output::OutDir;

#[derive(Parser, Debug)]
#[command(name = "zlip", version, about = "ZMP-augmented LIP planner and push-recovery simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML configuration file; every key has a default.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (default: [output].dir, else ./zlip-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Comma-separated output formats: csv, json, svg.
    #[arg(long, global = true, value_delimiter = ',')]
    format: Vec<Format>,

    /// Config override `section.key=value`; repeatable.
    #[arg(long = "override", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Periodic reference orbits and their fixed-point residuals.
    Orbit,
    /// One planner solve from a (perturbed) orbit state.
    Solve,
    /// Closed-loop scenario.
    Simulate,
    /// The scenario under every ablation mode.
    Ablation,
    /// Push-magnitude grid per ablation mode.
    Sweep,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = RunConfig::load(cli.config.as_deref(), &cli.overrides)?;
    if !cli.format.is_empty() {
        cfg.output.formats = cli.format.clone();
    }
    let dir = cli.out.or_else(|| cfg.output.dir.clone()).unwrap_or_else(|| PathBuf::from("zlip-out"));
    cfg.output.dir = Some(dir.clone());
    let out = OutDir::create(&dir)?;
    let echo = toml::to_string(&cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
    out.write("config.toml", &echo)?;
    match cli.command {
        Command::Orbit => commands::orbit(&cfg, &out),
        Command::Solve => commands::solve_once(&cfg, &out),
        Command::Simulate => commands::simulate(&cfg, &out),
        Command::Ablation => commands::ablation(&cfg, &out),
        Command::Sweep => commands::sweep(&cfg, &out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("zlip: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
