//! Scenario construction and the simulation loop
//! (measure → forecast → classify → balance → place → record).

mod cost;
mod trace;

pub use cost::CostModel;
pub use trace::{ForecastSeries, Policy, ServerSnapshot, SimulationTrace, StepRecord};

use crate::balancer::{
    apply_plan, consolidate_underload, plan_highlyload_migration, plan_overload_migration,
    select_server_for_flow, Action, BalancerConfig, BalancerError, DomainState, FlowCostTable,
    MigrationPlan, PlanTrigger,
};
use crate::baselines::{random_select, round_robin_select, NoServerAvailable, RoundRobinCursor};
use crate::domain::{
    normalize_utilization, FlowEvent, FlowId, LoadLevel, Metric, ResourceVector, ServerId,
    ServerSpec, ServerState, WindowMatrix, DEFAULT_WINDOW, GIGABYTE, MEGABYTE,
};
use crate::forecast::{
    ForecastError, ForecastVector, ForecasterModel, LstmConfig, TrainingReport,
};
use crate::fuzzy::{FuzzyError, FuzzySystem};
use crate::rng::{derive_seed, SeededRng};
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;

/// Switch and client counts, carried for the energy report only.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Topology {
    pub switches: u32,
    pub clients: u32,
}

/// A complete evaluation scenario: the flow arrival sequence, the server
/// fleet and the sampling cadence.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub flows: Vec<FlowEvent>,
    pub servers: Vec<ServerSpec>,
    pub topology: Topology,
    pub sample_interval_s: f64,
}

/// Every flow transmits for this long, which fixes its rate.
pub const FLOW_DURATION_S: f64 = 10.0;

/// UDP payload bytes per datagram (the iperf default).
pub const DATAGRAM_BYTES: u64 = 1470;

/// Datagrams needed to carry a flow of the given size.
pub fn datagram_count(size_bytes: u64) -> u64 {
    assert!(size_bytes > 0, "flows carry at least one byte");
    size_bytes.div_ceil(DATAGRAM_BYTES)
}

/// The built-in reference scenario: 26 UDP flows growing from 10 MB to
/// 260 MB in 10 MB increments, four heterogeneous servers behind four
/// switches and one client.
pub fn reference_scenario() -> Scenario {
    let flows = (1..=26u32)
        .map(|k| {
            let size = k as u64 * 10 * MEGABYTE as u64;
            FlowEvent::new(
                FlowId(k),
                size,
                size as f64 / FLOW_DURATION_S,
                datagram_count(size),
            )
        })
        .collect();
    let servers = alloc::vec![
        ServerSpec::new(ServerId(1), 1.0, 500.0 * MEGABYTE, 900.0 * MEGABYTE, 20.0 * MEGABYTE),
        ServerSpec::new(ServerId(2), 2.0, 550.0 * MEGABYTE, 2.0 * GIGABYTE, 20.0 * MEGABYTE),
        ServerSpec::new(ServerId(3), 1.0, 420.0 * MEGABYTE, 800.0 * MEGABYTE, 20.0 * MEGABYTE),
        ServerSpec::new(ServerId(4), 1.0, 450.0 * MEGABYTE, 700.0 * MEGABYTE, 20.0 * MEGABYTE),
    ];
    Scenario {
        flows,
        servers,
        topology: Topology {
            switches: 4,
            clients: 1,
        },
        sample_interval_s: 1.0,
    }
}

/// Full simulation configuration.
#[derive(Clone, Debug)]
pub struct SimConfig {
    pub policy: Policy,
    pub seed: u64,
    pub lstm: LstmConfig,
    pub balancer: BalancerConfig,
    pub cost: CostModel,
    /// Maximum servers the controller may manage (domain expansion limit).
    pub controller_capacity: usize,
    /// Consumption window width W.
    pub window: usize,
    /// Forecasting starts once a server has `max lookback + warmup_margin`
    /// samples; classification falls back to measured utilization before
    /// that.
    pub warmup_margin: usize,
    /// Innovation gate: each classification-view component is the forecast
    /// clamped to within this distance of the measured utilization, so a
    /// model lagging a regime change cannot mislead the balancer.
    pub forecast_gate: f64,
    pub fuzzy_grid_points: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            policy: Policy::Proposed,
            seed: 42,
            lstm: LstmConfig::default(),
            balancer: BalancerConfig::default(),
            cost: CostModel::default(),
            controller_capacity: 8,
            window: DEFAULT_WINDOW,
            warmup_margin: 5,
            forecast_gate: 0.15,
            fuzzy_grid_points: crate::fuzzy::FuzzySystem::default().grid_points,
        }
    }
}

impl SimConfig {
    fn warmup_samples(&self) -> usize {
        self.lstm.lookback.max() + self.warmup_margin
    }
}

/// A component failure with the step it happened in.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioError {
    pub step: usize,
    pub fault: StepFault,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StepFault {
    Forecast(ForecastError),
    Fuzzy(FuzzyError),
    Balancer(BalancerError),
    Baseline(NoServerAvailable),
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {}: ", self.step)?;
        match &self.fault {
            StepFault::Forecast(e) => write!(f, "{e}"),
            StepFault::Fuzzy(e) => write!(f, "{e}"),
            StepFault::Balancer(e) => write!(f, "{e}"),
            StepFault::Baseline(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for ScenarioError {}

/// Results of one simulation run.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub trace: SimulationTrace,
    /// Last training report per (server, metric) model.
    pub reports: BTreeMap<(ServerId, Metric), TrainingReport>,
    /// Measured-vs-forecast pairs per (server, metric).
    pub forecast_series: ForecastSeries,
    /// The trained forecasters still live at run end, for reuse.
    pub models: BTreeMap<(ServerId, Metric), ForecasterModel>,
}

/// Runs a scenario under one policy from a cold start. Deterministic for a
/// fixed (scenario, config) pair.
pub fn run(scenario: &Scenario, config: &SimConfig) -> Result<RunOutput, ScenarioError> {
    let mut engine = Engine::new(scenario, config);
    engine.record_initial();
    for flow in &scenario.flows {
        engine.step(flow)?;
    }
    Ok(engine.into_output())
}

struct Engine {
    config: SimConfig,
    system: FuzzySystem,
    state: DomainState,
    windows: BTreeMap<ServerId, WindowMatrix>,
    costs: FlowCostTable,
    selection_rng: SeededRng,
    rr_cursor: RoundRobinCursor,
    step_index: usize,
    records: Vec<StepRecord>,
    /// Persistent per-(server, metric) forecasters; training resumes on
    /// each step's grown window.
    models: BTreeMap<(ServerId, Metric), ForecasterModel>,
    reports: BTreeMap<(ServerId, Metric), TrainingReport>,
    forecast_series: ForecastSeries,
    /// Forecasts produced last step, matched against this step's samples.
    pending_forecasts: BTreeMap<(ServerId, Metric), f64>,
}

impl Engine {
    fn new(scenario: &Scenario, config: &SimConfig) -> Self {
        let system = FuzzySystem {
            grid_points: config.fuzzy_grid_points,
            ..FuzzySystem::default()
        };
        let servers: Vec<ServerState> = scenario
            .servers
            .iter()
            .cloned()
            .map(ServerState::new)
            .collect();
        let state = DomainState::new(servers, config.controller_capacity, &system);
        let costs: FlowCostTable = scenario
            .flows
            .iter()
            .map(|f| (f.id, config.cost.flow_cost(f)))
            .collect();
        let windows = scenario
            .servers
            .iter()
            .map(|s| (s.id, WindowMatrix::new(config.window)))
            .collect();
        let selection_rng = SeededRng::new(derive_seed(config.seed, &[0x5e1ec7]));
        Self {
            config: config.clone(),
            system,
            state,
            windows,
            costs,
            selection_rng,
            rr_cursor: RoundRobinCursor::default(),
            step_index: 0,
            records: Vec::new(),
            models: BTreeMap::new(),
            reports: BTreeMap::new(),
            forecast_series: ForecastSeries::new(),
            pending_forecasts: BTreeMap::new(),
        }
    }

    fn fail(&self, fault: StepFault) -> ScenarioError {
        ScenarioError {
            step: self.step_index,
            fault,
        }
    }

    fn snapshot_servers(&self) -> Vec<ServerSnapshot> {
        self.state
            .servers()
            .iter()
            .map(|s| {
                let (utilization, _) = normalize_utilization(s);
                ServerSnapshot {
                    id: s.id(),
                    powered_on: s.powered_on,
                    utilization,
                    level: self.state.level(s.id()),
                }
            })
            .collect()
    }

    fn record_initial(&mut self) {
        self.records.push(StepRecord {
            step: 0,
            flow: None,
            decision: None,
            plans: Vec::new(),
            servers: self.snapshot_servers(),
            forecasts: BTreeMap::new(),
        });
    }

    /// Samples utilization into the windows and matches last step's
    /// forecasts against the fresh measurements.
    fn sample(&mut self) {
        for server in self.state.servers() {
            if !server.powered_on {
                continue;
            }
            let (util, _) = normalize_utilization(server);
            let window = self
                .windows
                .entry(server.id())
                .or_insert_with(|| WindowMatrix::new(self.config.window));
            window.push_sample(&util);
            for metric in Metric::ALL {
                if let Some(predicted) = self.pending_forecasts.remove(&(server.id(), metric)) {
                    self.forecast_series
                        .entry((server.id(), metric))
                        .or_default()
                        .push((util.get(metric), predicted));
                }
            }
        }
        self.pending_forecasts.clear();
    }

    /// Builds each powered-on server's classification view: the LSTM
    /// forecast once enough history exists, the measured utilization until
    /// then.
    fn refresh_views(&mut self) -> Result<BTreeMap<ServerId, ForecastVector>, ScenarioError> {
        let mut forecasts = BTreeMap::new();
        let ids = self.state.powered_on_ids();
        for id in ids {
            let view = if self.config.policy == Policy::Proposed {
                match self.forecast_server(id)? {
                    Some(raw) => {
                        let clamped = ForecastVector::new(raw.cpu, raw.mem, raw.disk, raw.bw);
                        forecasts.insert(id, clamped);
                        for metric in Metric::ALL {
                            self.pending_forecasts
                                .insert((id, metric), clamped.get(metric));
                        }
                        let measured = self
                            .state
                            .server(id)
                            .expect("powered-on server exists")
                            .raw_utilization();
                        Some(self.gate_forecast(&raw, &measured))
                    }
                    None => None,
                }
            } else {
                None
            };
            match view {
                Some(view) => self.state.set_view(id, view, &self.system),
                None => self.state.refresh_view_from_measurement(id, &self.system),
            }
        }
        Ok(forecasts)
    }

    /// Bounds each forecast component to the innovation gate around the
    /// measurement it extends.
    fn gate_forecast(&self, forecast: &ResourceVector, measured: &ResourceVector) -> ResourceVector {
        let gate = self.config.forecast_gate;
        let bound = |f: f64, m: f64| f.clamp((m - gate).max(0.0), m + gate);
        ResourceVector::new(
            bound(forecast.cpu, measured.cpu),
            bound(forecast.mem, measured.mem),
            bound(forecast.disk, measured.disk),
            bound(forecast.bw, measured.bw),
        )
    }

    /// Rolls the four metric models forward on a server's window and
    /// predicts the next sample. Returns `None` while history is shorter
    /// than the warm-up requirement. Utilization series are already unit
    /// fractions, so the models use the unit scaler; parameters and
    /// optimizer state persist between steps.
    fn forecast_server(&mut self, id: ServerId) -> Result<Option<ResourceVector>, ScenarioError> {
        let window = match self.windows.get(&id) {
            Some(w) if w.len() >= self.config.warmup_samples() => w,
            _ => return Ok(None),
        };
        let mut components = [0.0f64; 4];
        for metric in Metric::ALL {
            let series = window.series(metric);
            let model = self.models.entry((id, metric)).or_insert_with(|| {
                let hyper = self.config.lstm.model_for(metric).with_seed(derive_seed(
                    self.config.seed,
                    &[1, id.0 as u64, metric.index() as u64],
                ));
                ForecasterModel::unit_scaled(&hyper)
            });
            let report = model.fit(&series).map_err(|e| ScenarioError {
                step: self.step_index,
                fault: StepFault::Forecast(e),
            })?;
            self.reports.insert((id, metric), report);
            let recent = &series[series.len() - model.params().lookback()..];
            let predicted = model.predict_next(recent).map_err(|e| ScenarioError {
                step: self.step_index,
                fault: StepFault::Forecast(e),
            })?;
            components[metric.index()] = predicted.max(0.0);
        }
        Ok(Some(ResourceVector::new(
            components[0],
            components[1],
            components[2],
            components[3],
        )))
    }

    fn apply(&mut self, plan: &MigrationPlan) -> Result<(), ScenarioError> {
        apply_plan(&mut self.state, plan, &self.costs, &self.system)
            .map_err(|e| self.fail(StepFault::Balancer(e)))
    }

    /// Consolidation, then over-load relief, then highly-load relief.
    fn rebalance(&mut self, plans: &mut Vec<MigrationPlan>) -> Result<(), ScenarioError> {
        let consolidation = consolidate_underload(
            &self.state,
            &self.costs,
            &self.system,
            &self.config.balancer,
        );
        if !consolidation.is_empty() {
            self.apply(&consolidation)?;
            plans.push(consolidation);
        }

        type Planner = fn(
            &DomainState,
            ServerId,
            &FlowCostTable,
            &FuzzySystem,
            &BalancerConfig,
        ) -> MigrationPlan;
        for (level, planner) in [
            (LoadLevel::OverLoad, plan_overload_migration as Planner),
            (LoadLevel::HighlyLoad, plan_highlyload_migration as Planner),
        ] {
            let mut handled: BTreeSet<ServerId> = BTreeSet::new();
            loop {
                let next = crate::balancer::relief_sources(&self.state, level)
                    .into_iter()
                    .find(|id| !handled.contains(id));
                let Some(source) = next else { break };
                handled.insert(source);
                let plan = planner(
                    &self.state,
                    source,
                    &self.costs,
                    &self.system,
                    &self.config.balancer,
                );
                if !plan.is_empty() {
                    self.apply(&plan)?;
                    plans.push(plan);
                }
            }
        }
        Ok(())
    }

    fn place(
        &mut self,
        flow: &FlowEvent,
    ) -> Result<(MigrationPlan, Option<ServerId>), ScenarioError> {
        match self.config.policy {
            Policy::Proposed => {
                let plan = select_server_for_flow(
                    &self.state,
                    flow.id,
                    &self.costs,
                    &self.system,
                    &self.config.balancer,
                );
                let target = plan.chosen_target;
                self.apply(&plan)?;
                Ok((plan, target))
            }
            Policy::Random => {
                let target = random_select(&self.state, &mut self.selection_rng)
                    .map_err(|e| self.fail(StepFault::Baseline(e)))?;
                let plan = assignment_plan(flow.id, target);
                self.apply(&plan)?;
                Ok((plan, Some(target)))
            }
            Policy::RoundRobin => {
                let (target, cursor) = round_robin_select(&self.state, self.rr_cursor)
                    .map_err(|e| self.fail(StepFault::Baseline(e)))?;
                self.rr_cursor = cursor;
                let plan = assignment_plan(flow.id, target);
                self.apply(&plan)?;
                Ok((plan, Some(target)))
            }
        }
    }

    fn step(&mut self, flow: &FlowEvent) -> Result<(), ScenarioError> {
        self.step_index += 1;
        self.sample();
        let forecasts = self.refresh_views()?;

        let mut plans = Vec::new();
        if self.config.policy == Policy::Proposed {
            self.rebalance(&mut plans)?;
        }
        let (placement, decision) = self.place(flow)?;
        plans.push(placement);

        // Servers powered off this step restart from scratch: their
        // history and their forecasters go with them.
        for id in self.state.off_pool() {
            if let Some(window) = self.windows.get_mut(&id) {
                window.clear();
            }
            for metric in Metric::ALL {
                self.models.remove(&(id, metric));
            }
        }

        self.records.push(StepRecord {
            step: self.step_index,
            flow: Some(flow.id),
            decision,
            plans,
            servers: self.snapshot_servers(),
            forecasts,
        });
        Ok(())
    }

    fn into_output(self) -> RunOutput {
        RunOutput {
            trace: SimulationTrace {
                policy: self.config.policy,
                seed: self.config.seed,
                records: self.records,
            },
            reports: self.reports,
            forecast_series: self.forecast_series,
            models: self.models,
        }
    }
}

fn assignment_plan(flow: FlowId, target: ServerId) -> MigrationPlan {
    MigrationPlan {
        trigger: PlanTrigger::Placement,
        actions: alloc::vec![Action::Assign { flow, target }],
        chosen_target: Some(target),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_scenario_matches_the_published_setup() {
        let scenario = reference_scenario();
        assert_eq!(scenario.flows.len(), 26);
        assert_eq!(scenario.flows[0].size_bytes, 10_000_000);
        assert_eq!(scenario.flows[25].size_bytes, 260_000_000);
        assert_eq!(scenario.servers[1].cpu_capacity, 2.0);
        assert_eq!(scenario.servers[2].mem_capacity, 420.0 * MEGABYTE);
        assert_eq!(scenario.topology.switches, 4);
        assert_eq!(scenario.topology.clients, 1);
    }

    #[test]
    fn datagram_counts_use_ceiling_division() {
        assert_eq!(datagram_count(1470), 1);
        assert_eq!(datagram_count(1471), 2);
        assert_eq!(datagram_count(10_000_000), 6803);
    }

    #[test]
    fn baseline_steps_never_change_power_state() {
        let scenario = reference_scenario();
        for policy in [Policy::Random, Policy::RoundRobin] {
            let config = SimConfig {
                policy,
                ..SimConfig::default()
            };
            let output = run(&scenario, &config).unwrap();
            assert_eq!(output.trace.off_server_steps(), 0, "{policy}");
        }
    }

    #[test]
    fn proposed_policy_powers_off_two_idle_servers_at_start() {
        let scenario = reference_scenario();
        let output = run(&scenario, &SimConfig::default()).unwrap();
        let first = &output.trace.records[1];
        assert_eq!(first.off_count(), 2);
        let off: Vec<u32> = first
            .servers
            .iter()
            .filter(|s| !s.powered_on)
            .map(|s| s.id.0)
            .collect();
        assert_eq!(off, alloc::vec![3, 4]);
    }

    #[test]
    fn trace_grows_by_one_record_per_flow() {
        let scenario = reference_scenario();
        let output = run(&scenario, &SimConfig::default()).unwrap();
        assert_eq!(output.trace.records.len(), 27);
        for (k, record) in output.trace.records.iter().enumerate() {
            assert_eq!(record.step, k);
        }
    }

    #[test]
    fn empty_flow_list_yields_only_the_initial_record() {
        let mut scenario = reference_scenario();
        scenario.flows.clear();
        let output = run(&scenario, &SimConfig::default()).unwrap();
        assert_eq!(output.trace.records.len(), 1);
        assert!(output.trace.records[0].flow.is_none());
    }

    #[test]
    fn identical_seeds_give_identical_traces() {
        let scenario = reference_scenario();
        for policy in Policy::ALL {
            let config = SimConfig {
                policy,
                ..SimConfig::default()
            };
            let a = run(&scenario, &config).unwrap();
            let b = run(&scenario, &config).unwrap();
            assert_eq!(a.trace.records.len(), b.trace.records.len());
            for (ra, rb) in a.trace.records.iter().zip(&b.trace.records) {
                assert_eq!(ra.decision, rb.decision, "{policy}");
                assert_eq!(ra.servers, rb.servers, "{policy}");
            }
        }
    }

    #[test]
    fn proposed_policy_never_places_on_an_over_loaded_server() {
        let scenario = reference_scenario();
        let output = run(&scenario, &SimConfig::default()).unwrap();
        for pair in output.trace.records.windows(2) {
            let (before, after) = (&pair[0], &pair[1]);
            if let Some(target) = after.decision {
                let level_before = before.snapshot(target).and_then(|s| s.level);
                assert_ne!(level_before, Some(LoadLevel::OverLoad));
            }
        }
    }
}
