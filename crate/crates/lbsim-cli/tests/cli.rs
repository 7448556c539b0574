//! End-to-end tests of the `lbsim` binary and the run orchestration.

use lbsim_cli::config::{RunConfig, Source};
use lbsim_cli::runner::run_command;
use std::fs;
use std::path::Path;
use std::process::Command;

fn binary() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lbsim"));
    cmd.env_remove("LBSIM_OUT");
    cmd
}

fn final_levels(metrics_path: &Path) -> Vec<(String, String)> {
    let doc: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(metrics_path).unwrap()).unwrap();
    doc["final_levels"]
        .as_object()
        .unwrap()
        .iter()
        .map(|(k, v)| (k.clone(), v.as_str().unwrap_or("off").to_string()))
        .collect()
}

#[test]
fn three_policies_produce_distinct_final_level_vectors() {
    let base = tempfile::tempdir().unwrap();
    let mut vectors = Vec::new();
    for policy in ["proposed", "random", "round-robin"] {
        let mut config = RunConfig::default();
        config.apply("policy", policy, Source::Flag).unwrap();
        config
            .apply("out", base.path().join(policy).to_str().unwrap(), Source::Flag)
            .unwrap();
        let summary = run_command(&config).unwrap();
        assert!(summary.trace_path.exists());
        vectors.push(final_levels(&summary.metrics_path));
    }
    assert_ne!(vectors[0], vectors[1]);
    assert_ne!(vectors[0], vectors[2]);
    assert_ne!(vectors[1], vectors[2]);
}

#[test]
fn unwritable_output_directory_fails_with_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let file_path = dir.path().join("occupied");
    fs::write(&file_path, "not a directory").unwrap();
    let out = file_path.join("nested");

    let mut config = RunConfig::default();
    config
        .apply("out", out.to_str().unwrap(), Source::Flag)
        .unwrap();
    assert!(run_command(&config).is_err());

    let status = binary()
        .args(["run", "--out", out.to_str().unwrap()])
        .stdout(std::process::Stdio::null())
        .stderr(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(!status.success());
}

#[test]
fn env_var_overrides_the_out_flag() {
    let base = tempfile::tempdir().unwrap();
    let flag_dir = base.path().join("flagged");
    let env_dir = base.path().join("enved");
    let status = Command::new(env!("CARGO_BIN_EXE_lbsim"))
        .args([
            "run",
            "--policy",
            "round-robin",
            "--out",
            flag_dir.to_str().unwrap(),
        ])
        .env("LBSIM_OUT", env_dir.to_str().unwrap())
        .stdout(std::process::Stdio::null())
        .stderr(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(env_dir.join("trace.csv").exists());
    assert!(!flag_dir.exists());
    let resolved = fs::read_to_string(env_dir.join("resolved_config.txt")).unwrap();
    assert!(resolved.contains(&format!("out = {}  (env)", env_dir.display())));
}

#[test]
fn resolved_config_logs_every_override_source() {
    let dir = tempfile::tempdir().unwrap();
    let config_file = dir.path().join("run.conf");
    fs::write(&config_file, "lstm.epochs = 20\n").unwrap();
    let out = dir.path().join("out");
    let status = binary()
        .args([
            "run",
            "--config",
            config_file.to_str().unwrap(),
            "--set",
            "lstm.hidden_units=64",
            "--policy",
            "round-robin",
            "--out",
            out.to_str().unwrap(),
        ])
        .stdout(std::process::Stdio::null())
        .stderr(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success());
    let resolved = fs::read_to_string(out.join("resolved_config.txt")).unwrap();
    assert!(resolved.contains("lstm.epochs = 20  (config-file)"));
    assert!(resolved.contains("lstm.hidden_units = 64  (flag)"));
    assert!(resolved.contains("policy = round-robin  (flag)"));
    assert!(resolved.contains("seed = 42  (default)"));
}

#[test]
fn unknown_policy_flag_fails_and_names_valid_values() {
    let output = binary()
        .args(["run", "--policy", "foo"])
        .output()
        .unwrap();
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("foo"));
    assert!(stderr.contains("proposed"));
    assert!(stderr.contains("round-robin"));
}

#[test]
fn rules_subcommand_exports_the_81_row_table() {
    let dir = tempfile::tempdir().unwrap();
    let table_path = dir.path().join("rules.txt");
    let status = binary()
        .args(["rules", "--out", table_path.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    let table = fs::read_to_string(&table_path).unwrap();
    assert_eq!(table.lines().count(), 82);
    assert!(table.lines().last().unwrap().contains("-> over"));
    assert!(table.contains("low"));
    assert!(table.contains("medium"));
}

#[test]
fn custom_scenario_file_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let scenario_path = dir.path().join("tiny.scenario");
    fs::write(
        &scenario_path,
        "sample_interval_s = 1\n\
         topology.switches = 2\n\
         topology.clients = 1\n\
         server.1.cpu_ghz = 1\n\
         server.1.mem_mb = 500\n\
         server.1.disk_mb = 900\n\
         server.1.bw_mbs = 20\n\
         server.2.cpu_ghz = 2\n\
         server.2.mem_mb = 550\n\
         server.2.disk_mb = 2000\n\
         server.2.bw_mbs = 20\n\
         flow.1.size_mb = 10\n\
         flow.2.size_mb = 20\n\
         flow.3.size_mb = 30\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = binary()
        .args([
            "run",
            "--scenario",
            scenario_path.to_str().unwrap(),
            "--policy",
            "round-robin",
            "--out",
            out.to_str().unwrap(),
        ])
        .stdout(std::process::Stdio::null())
        .stderr(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success());
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    // Initial record plus three flows, two servers each.
    assert_eq!(trace.lines().count(), 1 + 4 * 2);
}

#[test]
fn reruns_with_identical_config_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut artifacts = Vec::new();
    for name in ["a", "b"] {
        let mut config = RunConfig::default();
        config
            .apply("out", dir.path().join(name).to_str().unwrap(), Source::Flag)
            .unwrap();
        config.apply("seed", "7", Source::Flag).unwrap();
        let summary = run_command(&config).unwrap();
        artifacts.push((
            fs::read(&summary.trace_path).unwrap(),
            fs::read(&summary.metrics_path).unwrap(),
        ));
    }
    assert_eq!(artifacts[0].0, artifacts[1].0, "traces differ");
    assert_eq!(artifacts[0].1, artifacts[1].1, "metrics differ");
}

#[test]
fn plot_files_hold_actual_predicted_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = RunConfig::default();
    config
        .apply("out", dir.path().join("out").to_str().unwrap(), Source::Flag)
        .unwrap();
    let summary = run_command(&config).unwrap();
    assert!(!summary.plot_files.is_empty());
    for name in &summary.plot_files {
        let text = fs::read_to_string(dir.path().join("out/plots").join(name)).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("actual,predicted"));
        for line in lines {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 2);
            fields[0].parse::<f64>().unwrap();
            fields[1].parse::<f64>().unwrap();
        }
    }
}

#[test]
fn saved_parameters_reload_and_predict() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = RunConfig::default();
    config
        .apply("out", dir.path().join("out").to_str().unwrap(), Source::Flag)
        .unwrap();
    let summary = run_command(&config).unwrap();
    assert!(!summary.param_files.is_empty());
    for name in &summary.param_files {
        let path = dir.path().join("out/params").join(name);
        let (params, scaler) = lbsim_cli::params_io::load_params(&path).unwrap();
        let recent = vec![0.5; params.lookback()];
        let value = lbsim_core::forecast::predict_next(&params, &scaler, &recent).unwrap();
        assert!(value.is_finite());
    }
}
