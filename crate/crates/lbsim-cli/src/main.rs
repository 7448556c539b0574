//! `lbsim`: deterministic server load-balancing simulator.

use clap::{Args, Parser, Subcommand};
use lbsim_cli::config::{RunConfig, Source};
use lbsim_cli::runner::run_command;
use lbsim_core::fuzzy::build_rule_base;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "lbsim",
    about = "Deterministic SDN server load-balancing simulator: LSTM forecasting, fuzzy load levels, energy-aware placement",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario under a selection policy and write run artifacts
    Run(RunArgs),
    /// Export the 81-rule fuzzy rule base as a human-readable table
    Rules {
        /// Write the table here instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario: `reference` (built-in) or a scenario file path
    #[arg(long)]
    scenario: Option<String>,
    /// Selection policy: proposed, random or round-robin
    #[arg(long)]
    policy: Option<String>,
    /// Seed for every random stream in the run
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (the LBSIM_OUT environment variable overrides this)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Flat key=value configuration file applied before flags
    #[arg(long)]
    config: Option<PathBuf>,
    /// Individual setting override, repeatable (e.g. --set lstm.epochs=30)
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn resolve_config(args: &RunArgs) -> Result<RunConfig, String> {
    let mut config = RunConfig::default();
    if let Some(path) = &args.config {
        config.apply_file(path).map_err(|e| e.to_string())?;
    }
    for assignment in &args.set {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| format!("--set expects KEY=VALUE, got `{assignment}`"))?;
        config
            .apply(key.trim(), value.trim(), Source::Flag)
            .map_err(|e| e.to_string())?;
    }
    if let Some(scenario) = &args.scenario {
        config
            .apply("scenario", scenario, Source::Flag)
            .map_err(|e| e.to_string())?;
    }
    if let Some(policy) = &args.policy {
        config
            .apply("policy", policy, Source::Flag)
            .map_err(|e| e.to_string())?;
    }
    if let Some(seed) = args.seed {
        config
            .apply("seed", &seed.to_string(), Source::Flag)
            .map_err(|e| e.to_string())?;
    }
    if let Some(out) = &args.out {
        config
            .apply("out", &out.display().to_string(), Source::Flag)
            .map_err(|e| e.to_string())?;
    }
    if let Ok(out) = std::env::var("LBSIM_OUT") {
        config
            .apply("out", &out, Source::Env)
            .map_err(|e| e.to_string())?;
    }
    Ok(config)
}

fn run(args: &RunArgs) -> Result<(), String> {
    let config = resolve_config(args)?;
    let summary = run_command(&config).map_err(|e| e.to_string())?;
    println!(
        "run complete: trace={} metrics={} plots={} params={} off_server_steps={}",
        summary.trace_path.display(),
        summary.metrics_path.display(),
        summary.plot_files.len(),
        summary.param_files.len(),
        summary.off_server_steps,
    );
    println!("final levels: {}", summary.final_levels);
    Ok(())
}

fn rules(out: Option<&PathBuf>) -> Result<(), String> {
    let table = build_rule_base().render_table();
    match out {
        Some(path) => std::fs::write(path, table)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
        None => print!("{table}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::Rules { out } => rules(out.as_ref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
