//! Orchestration of one simulation run: scenario loading, execution and
//! artifact emission.

use crate::config::{load_scenario_file, RunConfig, ScenarioSource};
use crate::output::{model_file_name, write_metrics_json, write_plot_data, write_trace_csv};
use crate::params_io::save_params;
use lbsim_core::scenario::{reference_scenario, run, RunOutput, Scenario};
use std::fmt;
use std::fs;
use std::path::PathBuf;

#[derive(Debug)]
pub enum RunError {
    Io(String),
    Scenario(String),
    Simulation(String),
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Io(msg) | RunError::Scenario(msg) | RunError::Simulation(msg) => {
                f.write_str(msg)
            }
        }
    }
}

impl std::error::Error for RunError {}

/// What a successful run produced.
pub struct RunSummary {
    pub trace_path: PathBuf,
    pub metrics_path: PathBuf,
    pub plot_files: Vec<String>,
    pub param_files: Vec<String>,
    pub final_levels: String,
    pub off_server_steps: usize,
}

pub fn load_scenario(source: &ScenarioSource) -> Result<Scenario, RunError> {
    match source {
        ScenarioSource::Reference => Ok(reference_scenario()),
        ScenarioSource::File(path) => {
            load_scenario_file(path).map_err(|e| RunError::Scenario(e.to_string()))
        }
    }
}

/// Executes the configured run and writes every artifact under the output
/// directory: `resolved_config.txt`, `trace.csv`, `metrics.json`,
/// `plots/serverN_metric.csv` and `params/serverN_metric.params`.
pub fn run_command(config: &RunConfig) -> Result<RunSummary, RunError> {
    let out = &config.out_dir;
    fs::create_dir_all(out)
        .map_err(|e| RunError::Io(format!("cannot create output dir {}: {e}", out.display())))?;

    let resolved = config.render_resolved();
    eprint!("{resolved}");
    fs::write(out.join("resolved_config.txt"), &resolved)
        .map_err(|e| RunError::Io(format!("cannot write resolved config: {e}")))?;

    let scenario = load_scenario(&config.scenario)?;
    if scenario.servers.len() > config.sim.controller_capacity {
        return Err(RunError::Scenario(format!(
            "scenario defines {} servers but sim.controller_capacity is {}",
            scenario.servers.len(),
            config.sim.controller_capacity
        )));
    }
    let output: RunOutput =
        run(&scenario, &config.sim).map_err(|e| RunError::Simulation(e.to_string()))?;

    let trace_path = out.join("trace.csv");
    write_trace_csv(&output.trace, &trace_path)
        .map_err(|e| RunError::Io(format!("cannot write {}: {e}", trace_path.display())))?;

    let metrics_path = out.join("metrics.json");
    write_metrics_json(&output, &scenario, &metrics_path)
        .map_err(|e| RunError::Io(format!("cannot write {}: {e}", metrics_path.display())))?;

    let plot_files = write_plot_data(&output, &out.join("plots"))
        .map_err(|e| RunError::Io(format!("cannot write plot data: {e}")))?;

    let params_dir = out.join("params");
    fs::create_dir_all(&params_dir)
        .map_err(|e| RunError::Io(format!("cannot create {}: {e}", params_dir.display())))?;
    let mut param_files = Vec::new();
    for ((server, metric), model) in &output.models {
        let name = model_file_name(*server, *metric);
        save_params(model.params(), model.scaler(), &params_dir.join(&name))
            .map_err(|e| RunError::Io(format!("cannot write {name}: {e}")))?;
        param_files.push(name);
    }

    let final_levels = output
        .trace
        .final_record()
        .servers
        .iter()
        .map(|s| {
            format!(
                "{}={}",
                s.id,
                s.level.map(|l| l.token()).unwrap_or("off")
            )
        })
        .collect::<Vec<_>>()
        .join(" ");

    Ok(RunSummary {
        trace_path,
        metrics_path,
        plot_files,
        param_files,
        final_levels,
        off_server_steps: output.trace.off_server_steps(),
    })
}
