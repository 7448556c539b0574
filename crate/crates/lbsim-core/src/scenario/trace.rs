//! The simulation trace: one record per flow event plus the initial state.

use super::Topology;
use crate::balancer::MigrationPlan;
use crate::domain::{FlowId, LoadLevel, Metric, ServerId, UtilizationVector};
use crate::forecast::ForecastVector;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

/// Selection policy under test.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Policy {
    Proposed,
    Random,
    RoundRobin,
}

impl Policy {
    pub const ALL: [Policy; 3] = [Policy::Proposed, Policy::Random, Policy::RoundRobin];

    pub fn token(self) -> &'static str {
        match self {
            Policy::Proposed => "proposed",
            Policy::Random => "random",
            Policy::RoundRobin => "round-robin",
        }
    }

    pub fn from_token(token: &str) -> Option<Policy> {
        match token {
            "proposed" => Some(Policy::Proposed),
            "random" => Some(Policy::Random),
            "round-robin" => Some(Policy::RoundRobin),
            _ => None,
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Per-server snapshot at the end of one step.
#[derive(Clone, Debug, PartialEq)]
pub struct ServerSnapshot {
    pub id: ServerId,
    pub powered_on: bool,
    /// Measured utilization after the step's actions.
    pub utilization: UtilizationVector,
    /// Classified level; absent for powered-off servers.
    pub level: Option<LoadLevel>,
}

/// Everything that happened in one step.
#[derive(Clone, Debug)]
pub struct StepRecord {
    pub step: usize,
    /// The flow that arrived this step; `None` on the initial record.
    pub flow: Option<FlowId>,
    /// Where the policy routed the flow.
    pub decision: Option<ServerId>,
    /// Plans drawn up and applied this step, in order.
    pub plans: Vec<MigrationPlan>,
    pub servers: Vec<ServerSnapshot>,
    /// Next-step forecasts produced this step, when the forecaster ran.
    pub forecasts: BTreeMap<ServerId, ForecastVector>,
}

impl StepRecord {
    pub fn snapshot(&self, id: ServerId) -> Option<&ServerSnapshot> {
        self.servers.iter().find(|s| s.id == id)
    }

    pub fn off_count(&self) -> usize {
        self.servers.iter().filter(|s| !s.powered_on).count()
    }
}

/// Whole-run record: one entry per flow plus the initial state.
#[derive(Clone, Debug)]
pub struct SimulationTrace {
    pub policy: Policy,
    pub seed: u64,
    pub records: Vec<StepRecord>,
}

impl SimulationTrace {
    pub fn final_record(&self) -> &StepRecord {
        self.records.last().expect("trace holds the initial record")
    }

    /// True when any record shows this level on any server.
    pub fn level_ever_reached(&self, level: LoadLevel) -> bool {
        self.records
            .iter()
            .flat_map(|r| &r.servers)
            .any(|s| s.level == Some(level))
    }

    /// Total powered-off server-steps across all records.
    pub fn off_server_steps(&self) -> usize {
        self.records.iter().map(StepRecord::off_count).sum()
    }

    /// Powered-off switch-steps: switch k serves server k, and a switch is
    /// down exactly when its server is down. Switches beyond the server
    /// count stay up for the client paths.
    pub fn off_switch_steps(&self, topology: &Topology) -> usize {
        self.records
            .iter()
            .map(|r| {
                r.servers
                    .iter()
                    .take(topology.switches as usize)
                    .filter(|s| !s.powered_on)
                    .count()
            })
            .sum()
    }
}

/// Per-(server, metric) pairing of measured samples and the forecasts made
/// one step earlier, for plot emission.
pub type ForecastSeries = BTreeMap<(ServerId, Metric), Vec<(f64, f64)>>;
