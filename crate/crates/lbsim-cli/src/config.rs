//! Run configuration: flat `key=value` files with dotted namespaces,
//! flag and environment overrides, and full provenance of every setting.

use lbsim_core::domain::{FlowEvent, FlowId, ServerId, ServerSpec, MEGABYTE};
use lbsim_core::scenario::{datagram_count, Policy, Scenario, SimConfig, Topology, FLOW_DURATION_S};
use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

/// Where a setting's effective value came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Default,
    ConfigFile,
    Flag,
    Env,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Default => "default",
            Source::ConfigFile => "config-file",
            Source::Flag => "flag",
            Source::Env => "env",
        })
    }
}

/// Which scenario a run executes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScenarioSource {
    /// The built-in 26-flow reference scenario.
    Reference,
    /// A scenario definition file.
    File(PathBuf),
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Fully resolved run configuration plus the provenance of every key.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub scenario: ScenarioSource,
    pub out_dir: PathBuf,
    pub sim: SimConfig,
    provenance: BTreeMap<&'static str, (String, Source)>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let mut config = Self {
            scenario: ScenarioSource::Reference,
            out_dir: PathBuf::from("lbsim-out"),
            sim: SimConfig::default(),
        provenance: BTreeMap::new(),
        };
        for key in KEYS {
            let value = config.current_value(key);
            config.provenance.insert(key, (value, Source::Default));
        }
        config
    }
}

/// Every recognized configuration key.
const KEYS: &[&str] = &[
    "scenario",
    "policy",
    "seed",
    "out",
    "sim.controller_capacity",
    "sim.window",
    "sim.warmup_margin",
    "sim.forecast_gate",
    "lstm.hidden_units",
    "lstm.num_layers",
    "lstm.epochs",
    "lstm.batch_size",
    "lstm.learning_rate",
    "lstm.beta1",
    "lstm.beta2",
    "lstm.epsilon",
    "lstm.train_fraction",
    "lstm.lookback.cpu",
    "lstm.lookback.mem",
    "lstm.lookback.disk",
    "lstm.lookback.bw",
    "fuzzy.grid_points",
    "cost.bw_scale",
    "cost.cpu_ghz_per_mbs",
    "cost.mem_mb_per_mbs",
    "cost.disk_mb_per_mbs",
    "balancer.min_active",
    "balancer.other_domains_available",
];

impl RunConfig {
    fn current_value(&self, key: &str) -> String {
        match key {
            "scenario" => match &self.scenario {
                ScenarioSource::Reference => "reference".into(),
                ScenarioSource::File(path) => path.display().to_string(),
            },
            "policy" => self.sim.policy.token().into(),
            "seed" => self.sim.seed.to_string(),
            "out" => self.out_dir.display().to_string(),
            "sim.controller_capacity" => self.sim.controller_capacity.to_string(),
            "sim.window" => self.sim.window.to_string(),
            "sim.warmup_margin" => self.sim.warmup_margin.to_string(),
            "sim.forecast_gate" => self.sim.forecast_gate.to_string(),
            "lstm.hidden_units" => self.sim.lstm.hidden_units.to_string(),
            "lstm.num_layers" => self.sim.lstm.num_layers.to_string(),
            "lstm.epochs" => self.sim.lstm.epochs.to_string(),
            "lstm.batch_size" => self.sim.lstm.batch_size.to_string(),
            "lstm.learning_rate" => self.sim.lstm.learning_rate.to_string(),
            "lstm.beta1" => self.sim.lstm.adam_beta1.to_string(),
            "lstm.beta2" => self.sim.lstm.adam_beta2.to_string(),
            "lstm.epsilon" => self.sim.lstm.adam_epsilon.to_string(),
            "lstm.train_fraction" => self.sim.lstm.train_fraction.to_string(),
            "lstm.lookback.cpu" => self.sim.lstm.lookback.cpu.to_string(),
            "lstm.lookback.mem" => self.sim.lstm.lookback.mem.to_string(),
            "lstm.lookback.disk" => self.sim.lstm.lookback.disk.to_string(),
            "lstm.lookback.bw" => self.sim.lstm.lookback.bw.to_string(),
            "fuzzy.grid_points" => self.sim.fuzzy_grid_points.to_string(),
            "cost.bw_scale" => self.sim.cost.bw_scale.to_string(),
            "cost.cpu_ghz_per_mbs" => self.sim.cost.cpu_ghz_per_mbs.to_string(),
            "cost.mem_mb_per_mbs" => self.sim.cost.mem_mb_per_mbs.to_string(),
            "cost.disk_mb_per_mbs" => self.sim.cost.disk_mb_per_mbs.to_string(),
            "balancer.min_active" => self.sim.balancer.min_active.to_string(),
            "balancer.other_domains_available" => {
                self.sim.balancer.other_domains_available.to_string()
            }
            _ => unreachable!("unregistered key {key}"),
        }
    }

    /// Applies one `key=value` setting and records its provenance.
    pub fn apply(&mut self, key: &str, value: &str, source: Source) -> Result<(), ConfigError> {
        let canonical = KEYS
            .iter()
            .find(|&&k| k == key)
            .copied()
            .ok_or_else(|| err(format!("unknown configuration key `{key}`")))?;
        match canonical {
            "scenario" => {
                self.scenario = if value == "reference" {
                    ScenarioSource::Reference
                } else {
                    ScenarioSource::File(PathBuf::from(value))
                };
            }
            "policy" => {
                self.sim.policy = Policy::from_token(value).ok_or_else(|| {
                    err(format!(
                        "unknown policy `{value}`; valid values: proposed, random, round-robin"
                    ))
                })?;
            }
            "seed" => self.sim.seed = parse(key, value)?,
            "out" => self.out_dir = PathBuf::from(value),
            "sim.controller_capacity" => self.sim.controller_capacity = parse_min(key, value, 1)?,
            "sim.window" => self.sim.window = parse_min(key, value, 1)?,
            "sim.warmup_margin" => self.sim.warmup_margin = parse(key, value)?,
            "sim.forecast_gate" => self.sim.forecast_gate = parse_unit_ish(key, value)?,
            "lstm.hidden_units" => self.sim.lstm.hidden_units = parse_min(key, value, 1)?,
            "lstm.num_layers" => self.sim.lstm.num_layers = parse_min(key, value, 1)?,
            "lstm.epochs" => self.sim.lstm.epochs = parse_min(key, value, 1)?,
            "lstm.batch_size" => self.sim.lstm.batch_size = parse_min(key, value, 1)?,
            "lstm.learning_rate" => self.sim.lstm.learning_rate = parse_positive(key, value)?,
            "lstm.beta1" => self.sim.lstm.adam_beta1 = parse_unit_ish(key, value)?,
            "lstm.beta2" => self.sim.lstm.adam_beta2 = parse_unit_ish(key, value)?,
            "lstm.epsilon" => self.sim.lstm.adam_epsilon = parse_positive(key, value)?,
            "lstm.train_fraction" => {
                let fraction: f64 = parse(key, value)?;
                if fraction.is_nan() || fraction <= 0.0 || fraction >= 1.0 {
                    return Err(err(format!("{key} must lie strictly between 0 and 1")));
                }
                self.sim.lstm.train_fraction = fraction;
            }
            "lstm.lookback.cpu" => self.sim.lstm.lookback.cpu = parse_min(key, value, 1)?,
            "lstm.lookback.mem" => self.sim.lstm.lookback.mem = parse_min(key, value, 1)?,
            "lstm.lookback.disk" => self.sim.lstm.lookback.disk = parse_min(key, value, 1)?,
            "lstm.lookback.bw" => self.sim.lstm.lookback.bw = parse_min(key, value, 1)?,
            "fuzzy.grid_points" => self.sim.fuzzy_grid_points = parse_min(key, value, 2)?,
            "cost.bw_scale" => self.sim.cost.bw_scale = parse_non_negative(key, value)?,
            "cost.cpu_ghz_per_mbs" => self.sim.cost.cpu_ghz_per_mbs = parse_non_negative(key, value)?,
            "cost.mem_mb_per_mbs" => self.sim.cost.mem_mb_per_mbs = parse_non_negative(key, value)?,
            "cost.disk_mb_per_mbs" => self.sim.cost.disk_mb_per_mbs = parse_non_negative(key, value)?,
            "balancer.min_active" => self.sim.balancer.min_active = parse(key, value)?,
            "balancer.other_domains_available" => {
                self.sim.balancer.other_domains_available = parse(key, value)?
            }
            _ => unreachable!(),
        }
        self.provenance
            .insert(canonical, (self.current_value(canonical), source));
        // The seed also feeds the LSTM config so forecaster seeding follows
        // the run seed.
        self.sim.lstm.rng_seed = self.sim.seed;
        Ok(())
    }

    /// Applies every assignment in a flat config file. Blank lines and
    /// `#` comments are ignored.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = fs::read_to_string(path)
            .map_err(|e| err(format!("cannot read config {}: {e}", path.display())))?;
        for (assignment, line_no) in assignments(&text) {
            let (key, value) = split_assignment(assignment)
                .ok_or_else(|| err(format!("{}:{line_no}: expected key=value", path.display())))?;
            self.apply(key, value, Source::ConfigFile)
                .map_err(|e| err(format!("{}:{line_no}: {e}", path.display())))?;
        }
        Ok(())
    }

    /// One line per key: `key = value  (source)`.
    pub fn render_resolved(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let (value, source) = &self.provenance[key];
            out.push_str(&format!("{key} = {value}  ({source})\n"));
        }
        out
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .parse()
        .map_err(|_| err(format!("invalid value `{value}` for {key}")))
}

fn parse_min(key: &str, value: &str, min: usize) -> Result<usize, ConfigError> {
    let parsed: usize = parse(key, value)?;
    if parsed < min {
        return Err(err(format!("{key} must be at least {min}")));
    }
    Ok(parsed)
}

fn parse_positive(key: &str, value: &str) -> Result<f64, ConfigError> {
    let parsed: f64 = parse(key, value)?;
    if parsed.is_nan() || parsed <= 0.0 {
        return Err(err(format!("{key} must be positive")));
    }
    Ok(parsed)
}

fn parse_non_negative(key: &str, value: &str) -> Result<f64, ConfigError> {
    let parsed: f64 = parse(key, value)?;
    if parsed.is_nan() || parsed < 0.0 {
        return Err(err(format!("{key} must not be negative")));
    }
    Ok(parsed)
}

fn parse_unit_ish(key: &str, value: &str) -> Result<f64, ConfigError> {
    let parsed: f64 = parse(key, value)?;
    if !(0.0..=1.0).contains(&parsed) {
        return Err(err(format!("{key} must lie in [0, 1]")));
    }
    Ok(parsed)
}

fn assignments(text: &str) -> impl Iterator<Item = (&str, usize)> {
    text.lines()
        .enumerate()
        .map(|(k, line)| (line.trim(), k + 1))
        .filter(|(line, _)| !line.is_empty() && !line.starts_with('#'))
}

fn split_assignment(line: &str) -> Option<(&str, &str)> {
    let (key, value) = line.split_once('=')?;
    Some((key.trim(), value.trim()))
}

/// Parses a scenario definition file: per-server capacities, per-flow
/// sizes, topology counts and the sampling interval.
pub fn load_scenario_file(path: &Path) -> Result<Scenario, ConfigError> {
    let text = fs::read_to_string(path)
        .map_err(|e| err(format!("cannot read scenario {}: {e}", path.display())))?;
    let mut servers: BTreeMap<u32, [Option<f64>; 4]> = BTreeMap::new();
    let mut flows: BTreeMap<u32, f64> = BTreeMap::new();
    let mut switches: u32 = 0;
    let mut clients: u32 = 0;
    let mut sample_interval_s: f64 = 1.0;

    for (assignment, line_no) in assignments(&text) {
        let (key, value) = split_assignment(assignment)
            .ok_or_else(|| err(format!("{}:{line_no}: expected key=value", path.display())))?;
        let fail = |msg: String| err(format!("{}:{line_no}: {msg}", path.display()));
        let parts: Vec<&str> = key.split('.').collect();
        match parts.as_slice() {
            ["sample_interval_s"] => {
                sample_interval_s = value
                    .parse()
                    .map_err(|_| fail(format!("invalid value `{value}`")))?;
            }
            ["topology", "switches"] => {
                switches = value
                    .parse()
                    .map_err(|_| fail(format!("invalid value `{value}`")))?;
            }
            ["topology", "clients"] => {
                clients = value
                    .parse()
                    .map_err(|_| fail(format!("invalid value `{value}`")))?;
            }
            ["server", id, field] => {
                let id: u32 = id
                    .parse()
                    .map_err(|_| fail(format!("invalid server id `{id}`")))?;
                let slot = match *field {
                    "cpu_ghz" => 0,
                    "mem_mb" => 1,
                    "disk_mb" => 2,
                    "bw_mbs" => 3,
                    other => {
                        return Err(fail(format!(
                            "unknown server field `{other}`; expected cpu_ghz, mem_mb, disk_mb or bw_mbs"
                        )))
                    }
                };
                let parsed: f64 = value
                    .parse()
                    .map_err(|_| fail(format!("invalid value `{value}`")))?;
                if parsed.is_nan() || parsed <= 0.0 {
                    return Err(fail(format!("server capacities must be positive, got {value}")));
                }
                servers.entry(id).or_default()[slot] = Some(parsed);
            }
            ["flow", id, "size_mb"] => {
                let id: u32 = id
                    .parse()
                    .map_err(|_| fail(format!("invalid flow id `{id}`")))?;
                let size: f64 = value
                    .parse()
                    .map_err(|_| fail(format!("invalid value `{value}`")))?;
                if size.is_nan() || size <= 0.0 {
                    return Err(fail(format!("flow sizes must be positive, got {value}")));
                }
                flows.insert(id, size);
            }
            _ => return Err(fail(format!("unknown scenario key `{key}`"))),
        }
    }

    if servers.is_empty() {
        return Err(err(format!("{}: no servers defined", path.display())));
    }
    if flows.is_empty() {
        return Err(err(format!("{}: no flows defined", path.display())));
    }

    let mut specs = Vec::new();
    for (id, fields) in servers {
        let [cpu, mem, disk, bw] = fields;
        let missing = |name: &str| err(format!("{}: server.{id}.{name} missing", path.display()));
        specs.push(ServerSpec::new(
            ServerId(id),
            cpu.ok_or_else(|| missing("cpu_ghz"))?,
            mem.ok_or_else(|| missing("mem_mb"))? * MEGABYTE,
            disk.ok_or_else(|| missing("disk_mb"))? * MEGABYTE,
            bw.ok_or_else(|| missing("bw_mbs"))? * MEGABYTE,
        ));
    }
    let events = flows
        .into_iter()
        .map(|(id, size_mb)| {
            let size_bytes = (size_mb * MEGABYTE) as u64;
            FlowEvent::new(
                FlowId(id),
                size_bytes,
                size_bytes as f64 / FLOW_DURATION_S,
                datagram_count(size_bytes),
            )
        })
        .collect();

    Ok(Scenario {
        flows: events,
        servers: specs,
        topology: Topology { switches, clients },
        sample_interval_s,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn defaults_cover_every_key_with_default_source() {
        let config = RunConfig::default();
        let resolved = config.render_resolved();
        assert_eq!(resolved.lines().count(), KEYS.len());
        assert!(resolved.lines().all(|l| l.ends_with("(default)")));
        assert!(resolved.contains("policy = proposed  (default)"));
        assert!(resolved.contains("seed = 42  (default)"));
        assert!(resolved.contains("lstm.epochs = 15  (default)"));
    }

    #[test]
    fn unknown_key_is_rejected_by_name() {
        let mut config = RunConfig::default();
        let e = config.apply("lstm.hidden", "3", Source::Flag).unwrap_err();
        assert!(e.to_string().contains("lstm.hidden"));
    }

    #[test]
    fn unknown_policy_lists_valid_values() {
        let mut config = RunConfig::default();
        let e = config.apply("policy", "foo", Source::Flag).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("foo"));
        assert!(msg.contains("proposed"));
        assert!(msg.contains("random"));
        assert!(msg.contains("round-robin"));
    }

    #[test]
    fn overrides_update_value_and_provenance() {
        let mut config = RunConfig::default();
        config.apply("lstm.hidden_units", "64", Source::Flag).unwrap();
        assert_eq!(config.sim.lstm.hidden_units, 64);
        assert!(config
            .render_resolved()
            .contains("lstm.hidden_units = 64  (flag)"));
    }

    #[test]
    fn seed_override_feeds_the_forecaster_seed() {
        let mut config = RunConfig::default();
        config.apply("seed", "7", Source::Flag).unwrap();
        assert_eq!(config.sim.seed, 7);
        assert_eq!(config.sim.lstm.rng_seed, 7);
    }

    #[test]
    fn config_file_round_trips_through_apply() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "# comment").unwrap();
        writeln!(file, "policy = round-robin").unwrap();
        writeln!(file, "cost.bw_scale = 0.5").unwrap();
        let mut config = RunConfig::default();
        config.apply_file(file.path()).unwrap();
        assert_eq!(config.sim.policy, Policy::RoundRobin);
        assert_eq!(config.sim.cost.bw_scale, 0.5);
        assert!(config
            .render_resolved()
            .contains("cost.bw_scale = 0.5  (config-file)"));
    }

    #[test]
    fn malformed_config_line_reports_position() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "policy round-robin").unwrap();
        let mut config = RunConfig::default();
        let e = config.apply_file(file.path()).unwrap_err();
        assert!(e.to_string().contains(":1"));
    }

    #[test]
    fn scenario_file_parses_servers_and_flows() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        write!(
            file,
            "sample_interval_s = 2\n\
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
             flow.2.size_mb = 20\n"
        )
        .unwrap();
        let scenario = load_scenario_file(file.path()).unwrap();
        assert_eq!(scenario.servers.len(), 2);
        assert_eq!(scenario.flows.len(), 2);
        assert_eq!(scenario.flows[1].size_bytes, 20_000_000);
        assert_eq!(scenario.flows[1].datagram_count, 13606);
        assert_eq!(scenario.sample_interval_s, 2.0);
    }

    #[test]
    fn scenario_file_rejects_unknown_keys() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        writeln!(file, "server.1.gpu = 4").unwrap();
        let e = load_scenario_file(file.path()).unwrap_err();
        assert!(e.to_string().contains("gpu"));
    }

    #[test]
    fn scenario_file_requires_complete_servers() {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        write!(
            file,
            "server.1.cpu_ghz = 1\nserver.1.mem_mb = 500\nserver.1.disk_mb = 900\nflow.1.size_mb = 10\n"
        )
        .unwrap();
        let e = load_scenario_file(file.path()).unwrap_err();
        assert!(e.to_string().contains("bw_mbs"));
    }
}
