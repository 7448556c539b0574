//! Emission of run artifacts: the trace CSV, the metrics JSON and the
//! per-metric forecast plot data.

use lbsim_core::balancer::Action;
use lbsim_core::domain::{LoadLevel, Metric, ServerId};
use lbsim_core::forecast::TrainingReport;
use lbsim_core::scenario::{RunOutput, Scenario, SimulationTrace, StepRecord};
use serde_json::json;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub const TRACE_HEADER: &str = "step,flow_id,policy,server_id,x,y,z,w,level,powered_on,action";

/// One CSV line of the trace: a (step, server) pair.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub flow_id: Option<u32>,
    pub policy: String,
    pub server_id: u32,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
    pub level: Option<LoadLevel>,
    pub powered_on: bool,
    pub action: String,
}

/// Action tokens attributed to each server within one step.
fn action_tokens(record: &StepRecord) -> BTreeMap<ServerId, Vec<String>> {
    let mut tokens: BTreeMap<ServerId, Vec<String>> = BTreeMap::new();
    let mut push = |id: ServerId, token: String| tokens.entry(id).or_default().push(token);
    for plan in &record.plans {
        for action in &plan.actions {
            match action {
                Action::Assign { flow, target } => push(*target, format!("place:{flow}")),
                Action::MoveFlow {
                    flow,
                    source,
                    target,
                    rule,
                } => {
                    push(*source, format!("shed:{flow}:{}", rule.token()));
                    push(*target, format!("recv:{flow}:{}", rule.token()));
                }
                Action::PowerOn(id) => push(*id, "on".into()),
                Action::PowerOff(id) => push(*id, "off".into()),
                Action::AddServer(spec) => push(spec.id, "add".into()),
                Action::RedirectToOtherDomain { flow, from } => {
                    push(*from, format!("redirect:{flow}"))
                }
                Action::Unresolvable { server } => push(*server, "stall".into()),
                Action::PlacementFailed { .. } => {}
            }
        }
    }
    tokens
}

/// Flattens a trace into per-(step, server) rows.
pub fn trace_rows(trace: &SimulationTrace) -> Vec<TraceRow> {
    let policy = trace.policy.token().to_string();
    let mut rows = Vec::new();
    for record in &trace.records {
        let tokens = action_tokens(record);
        for snapshot in &record.servers {
            rows.push(TraceRow {
                step: record.step,
                flow_id: record.flow.map(|f| f.0),
                policy: policy.clone(),
                server_id: snapshot.id.0,
                x: snapshot.utilization.cpu,
                y: snapshot.utilization.mem,
                z: snapshot.utilization.disk,
                w: snapshot.utilization.bw,
                level: snapshot.level,
                powered_on: snapshot.powered_on,
                action: tokens
                    .get(&snapshot.id)
                    .map(|t| t.join(";"))
                    .unwrap_or_default(),
            });
        }
    }
    rows
}

pub fn render_trace_csv(rows: &[TraceRow]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for row in rows {
        let flow = row.flow_id.map(|f| f.to_string()).unwrap_or_default();
        let level = row.level.map(|l| l.token().to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            row.step,
            flow,
            row.policy,
            row.server_id,
            row.x,
            row.y,
            row.z,
            row.w,
            level,
            row.powered_on,
            row.action
        );
    }
    out
}

/// Parses a trace CSV back into rows. Exact inverse of
/// [`render_trace_csv`]: float fields round-trip bit-for-bit.
pub fn parse_trace_csv(text: &str) -> Result<Vec<TraceRow>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == TRACE_HEADER => {}
        other => return Err(format!("bad trace header: {other:?}")),
    }
    let mut rows = Vec::new();
    for (line, line_no) in lines.zip(2..) {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 11 {
            return Err(format!("line {line_no}: expected 11 fields, got {}", fields.len()));
        }
        let parse_f64 = |s: &str, what: &str| -> Result<f64, String> {
            s.parse()
                .map_err(|_| format!("line {line_no}: bad {what} `{s}`"))
        };
        rows.push(TraceRow {
            step: fields[0]
                .parse()
                .map_err(|_| format!("line {line_no}: bad step `{}`", fields[0]))?,
            flow_id: if fields[1].is_empty() {
                None
            } else {
                Some(
                    fields[1]
                        .parse()
                        .map_err(|_| format!("line {line_no}: bad flow `{}`", fields[1]))?,
                )
            },
            policy: fields[2].to_string(),
            server_id: fields[3]
                .parse()
                .map_err(|_| format!("line {line_no}: bad server `{}`", fields[3]))?,
            x: parse_f64(fields[4], "x")?,
            y: parse_f64(fields[5], "y")?,
            z: parse_f64(fields[6], "z")?,
            w: parse_f64(fields[7], "w")?,
            level: if fields[8].is_empty() {
                None
            } else {
                Some(
                    LoadLevel::from_token(fields[8])
                        .ok_or_else(|| format!("line {line_no}: bad level `{}`", fields[8]))?,
                )
            },
            powered_on: fields[9]
                .parse()
                .map_err(|_| format!("line {line_no}: bad powered_on `{}`", fields[9]))?,
            action: fields[10].to_string(),
        });
    }
    Ok(rows)
}

pub fn write_trace_csv(trace: &SimulationTrace, path: &Path) -> std::io::Result<()> {
    fs::write(path, render_trace_csv(&trace_rows(trace)))
}

fn report_json(report: &TrainingReport) -> serde_json::Value {
    json!({
        "rmse": report.rmse,
        "mae": report.mae,
        "r2": report.r2,
        "epochs_run": report.epochs_run,
        "final_loss": report.final_loss,
    })
}

/// Builds the metrics document: forecaster accuracy per (server, metric),
/// energy accounting and the final level of every server.
pub fn metrics_json(output: &RunOutput, scenario: &Scenario) -> serde_json::Value {
    let mut forecaster = serde_json::Map::new();
    for ((server, metric), report) in &output.reports {
        let entry = forecaster
            .entry(format!("server{}", server.0))
            .or_insert_with(|| json!({}));
        entry
            .as_object_mut()
            .expect("server entry is an object")
            .insert(metric.name().to_string(), report_json(report));
    }

    let final_record = output.trace.final_record();
    let mut final_levels = serde_json::Map::new();
    let mut placements = BTreeMap::new();
    for record in &output.trace.records {
        if let Some(target) = record.decision {
            *placements.entry(target.0).or_insert(0u32) += 1;
        }
    }
    for snapshot in &final_record.servers {
        final_levels.insert(
            format!("server{}", snapshot.id.0),
            match snapshot.level {
                Some(level) => json!(level.token()),
                None => json!(null),
            },
        );
    }

    json!({
        "policy": output.trace.policy.token(),
        "seed": output.trace.seed,
        "steps": output.trace.records.len(),
        "forecaster": forecaster,
        "energy": {
            "server_off_steps": output.trace.off_server_steps(),
            "switch_off_steps": output.trace.off_switch_steps(&scenario.topology),
            "servers": scenario.servers.len(),
            "switches": scenario.topology.switches,
            "clients": scenario.topology.clients,
        },
        "final_levels": final_levels,
        "placements": placements
            .into_iter()
            .map(|(id, n)| (format!("server{id}"), json!(n)))
            .collect::<serde_json::Map<_, _>>(),
    })
}

pub fn write_metrics_json(
    output: &RunOutput,
    scenario: &Scenario,
    path: &Path,
) -> std::io::Result<()> {
    let doc = metrics_json(output, scenario);
    fs::write(path, format!("{:#}\n", doc))
}

/// Writes one two-column `actual,predicted` CSV per (server, metric) pair
/// into `dir`, returning the file names written.
pub fn write_plot_data(output: &RunOutput, dir: &Path) -> std::io::Result<Vec<String>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for ((server, metric), series) in &output.forecast_series {
        let mut text = String::from("actual,predicted\n");
        for (actual, predicted) in series {
            let _ = writeln!(text, "{actual},{predicted}");
        }
        let name = format!("server{}_{}.csv", server.0, metric.name());
        fs::write(dir.join(&name), text)?;
        written.push(name);
    }
    Ok(written)
}

/// Per-(server, metric) file name helper used by parameter dumps.
pub fn model_file_name(server: ServerId, metric: Metric) -> String {
    format!("server{}_{}.params", server.0, metric.name())
}
