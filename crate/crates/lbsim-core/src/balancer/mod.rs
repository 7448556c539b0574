//! The load-balancing decision engine: flow placement, relief migration off
//! over-loaded and highly-loaded servers, under-load consolidation with
//! power-off, and plan application.
//!
//! Planning is pure: each planner works on a scratch copy of the domain and
//! emits a [`MigrationPlan`] whose actions replay deterministically through
//! [`apply_plan`]. Levels inside the domain derive from per-server
//! *classification views*: the raw utilization fractions (forecast-based
//! once enough history exists, measured otherwise) that the fuzzy system
//! classified. Hypothetical moves shift a view by the normalized cost of
//! the moved flows, so a plan's predicted outcome and its applied outcome
//! are identical.

mod planning;

pub use planning::{
    candidate_targets, consolidate_underload, plan_highlyload_migration,
    plan_overload_migration, relief_sources, select_server_for_flow,
};

use crate::domain::{
    FlowId, LoadLevel, ResourceVector, ServerId, ServerSpec, ServerState, UtilizationVector,
};
use crate::forecast::ForecastVector;
use crate::fuzzy::FuzzySystem;
use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

/// Per-flow resource cost of every known flow, in absolute load units.
#[derive(Clone, Debug, Default)]
pub struct FlowCostTable {
    costs: BTreeMap<FlowId, ResourceVector>,
}

impl FlowCostTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, flow: FlowId, cost: ResourceVector) {
        self.costs.insert(flow, cost);
    }

    pub fn get(&self, flow: FlowId) -> Result<&ResourceVector, BalancerError> {
        self.costs
            .get(&flow)
            .ok_or(BalancerError::UnknownFlow { flow })
    }
}

impl FromIterator<(FlowId, ResourceVector)> for FlowCostTable {
    fn from_iter<T: IntoIterator<Item = (FlowId, ResourceVector)>>(iter: T) -> Self {
        Self {
            costs: iter.into_iter().collect(),
        }
    }
}

/// Which rule selected a transfer target.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransferRule {
    /// C1: target under-loaded and still under-loaded after the transfer.
    UnderToUnder,
    /// C2: target under-loaded, normal-loaded after the transfer.
    UnderToNormal,
    /// C3: target normal-loaded and still normal-loaded after the transfer.
    NormalToNormal,
    /// Under-load consolidation onto another under-loaded server.
    Consolidation,
    /// Forced transfer onto a freshly powered-on or added server.
    Takeover,
}

impl TransferRule {
    pub fn token(self) -> &'static str {
        match self {
            TransferRule::UnderToUnder => "c1",
            TransferRule::UnderToNormal => "c2",
            TransferRule::NormalToNormal => "c3",
            TransferRule::Consolidation => "merge",
            TransferRule::Takeover => "takeover",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        match token {
            "c1" => Some(TransferRule::UnderToUnder),
            "c2" => Some(TransferRule::UnderToNormal),
            "c3" => Some(TransferRule::NormalToNormal),
            "merge" => Some(TransferRule::Consolidation),
            "takeover" => Some(TransferRule::Takeover),
            _ => None,
        }
    }
}

/// One step of a migration plan.
#[derive(Clone, Debug, PartialEq)]
pub enum Action {
    /// Route a newly arrived flow to a server.
    Assign { flow: FlowId, target: ServerId },
    /// Move a hosted flow between servers.
    MoveFlow {
        flow: FlowId,
        source: ServerId,
        target: ServerId,
        rule: TransferRule,
    },
    PowerOn(ServerId),
    PowerOff(ServerId),
    /// Expand the domain with a new server.
    AddServer(ServerSpec),
    /// Hand a flow over to another controller domain (recorded, not
    /// simulated).
    RedirectToOtherDomain { flow: FlowId, from: ServerId },
    /// Relief for this server exhausted every fallback.
    Unresolvable { server: ServerId },
    /// No server, powered-off reserve or expansion slot could take the flow.
    PlacementFailed { flow: FlowId },
}

/// Why a plan was drawn up, for trace audit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlanTrigger {
    Placement,
    OverloadRelief,
    HighlyLoadRelief,
    Consolidation,
}

impl PlanTrigger {
    pub fn token(self) -> &'static str {
        match self {
            PlanTrigger::Placement => "placement",
            PlanTrigger::OverloadRelief => "overload",
            PlanTrigger::HighlyLoadRelief => "highlyload",
            PlanTrigger::Consolidation => "consolidation",
        }
    }
}

/// Ordered actions resolving one trigger, plus the selected target server
/// when one exists.
#[derive(Clone, Debug, PartialEq)]
pub struct MigrationPlan {
    pub trigger: PlanTrigger,
    pub actions: Vec<Action>,
    pub chosen_target: Option<ServerId>,
}

impl MigrationPlan {
    pub fn empty(trigger: PlanTrigger) -> Self {
        Self {
            trigger,
            actions: Vec::new(),
            chosen_target: None,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }
}

/// Tunables of the balancing policy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BalancerConfig {
    /// Consolidation never drops the number of powered-on servers below
    /// this floor.
    pub min_active: usize,
    /// Whether another controller domain can accept redirected load.
    pub other_domains_available: bool,
}

impl Default for BalancerConfig {
    fn default() -> Self {
        Self {
            min_active: 2,
            other_domains_available: false,
        }
    }
}

/// Errors from plan application.
#[derive(Clone, Debug, PartialEq)]
pub enum BalancerError {
    UnknownServer { server: ServerId },
    UnknownFlow { flow: FlowId },
    ServerPoweredOff { server: ServerId },
    ServerAlreadyOn { server: ServerId },
    NotHostingFlow { server: ServerId, flow: FlowId },
    StillHostingFlows { server: ServerId },
    CapacityExhausted { capacity: usize },
    DuplicateServer { server: ServerId },
    /// An action could not be applied; carries its index in the plan.
    ActionFailed {
        index: usize,
        cause: Box<BalancerError>,
    },
}

impl fmt::Display for BalancerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BalancerError::UnknownServer { server } => write!(f, "unknown server {server}"),
            BalancerError::UnknownFlow { flow } => write!(f, "no cost known for flow {flow}"),
            BalancerError::ServerPoweredOff { server } => {
                write!(f, "server {server} is powered off")
            }
            BalancerError::ServerAlreadyOn { server } => {
                write!(f, "server {server} is already powered on")
            }
            BalancerError::NotHostingFlow { server, flow } => {
                write!(f, "server {server} does not host flow {flow}")
            }
            BalancerError::StillHostingFlows { server } => {
                write!(f, "server {server} still hosts flows")
            }
            BalancerError::CapacityExhausted { capacity } => {
                write!(f, "controller capacity of {capacity} servers exhausted")
            }
            BalancerError::DuplicateServer { server } => {
                write!(f, "server id {server} already exists")
            }
            BalancerError::ActionFailed { index, cause } => {
                write!(f, "plan action {index} failed: {cause}")
            }
        }
    }
}

impl core::error::Error for BalancerError {}

/// One controller domain: its servers, the classification views and levels
/// of the powered-on ones, and the controller's server capacity.
#[derive(Clone, Debug)]
pub struct DomainState {
    servers: Vec<ServerState>,
    /// Raw (unclamped) utilization fractions each powered-on server was
    /// last classified from.
    views: BTreeMap<ServerId, ResourceVector>,
    levels: BTreeMap<ServerId, LoadLevel>,
    controller_capacity: usize,
}

impl DomainState {
    /// Builds a domain and classifies every powered-on server from its
    /// measured utilization.
    pub fn new(
        servers: Vec<ServerState>,
        controller_capacity: usize,
        system: &FuzzySystem,
    ) -> Self {
        assert!(
            servers.len() <= controller_capacity,
            "domain exceeds controller capacity"
        );
        let mut ids: Vec<ServerId> = servers.iter().map(|s| s.id()).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), servers.len(), "server ids must be unique");

        let mut state = Self {
            servers,
            views: BTreeMap::new(),
            levels: BTreeMap::new(),
            controller_capacity,
        };
        state.servers.sort_by_key(|s| s.id());
        for id in state.powered_on_ids() {
            state.refresh_view_from_measurement(id, system);
        }
        state
    }

    pub fn servers(&self) -> &[ServerState] {
        &self.servers
    }

    pub fn controller_capacity(&self) -> usize {
        self.controller_capacity
    }

    pub fn server(&self, id: ServerId) -> Result<&ServerState, BalancerError> {
        self.servers
            .iter()
            .find(|s| s.id() == id)
            .ok_or(BalancerError::UnknownServer { server: id })
    }

    fn server_mut(&mut self, id: ServerId) -> Result<&mut ServerState, BalancerError> {
        self.servers
            .iter_mut()
            .find(|s| s.id() == id)
            .ok_or(BalancerError::UnknownServer { server: id })
    }

    /// Powered-on server ids in ascending order.
    pub fn powered_on_ids(&self) -> Vec<ServerId> {
        self.servers
            .iter()
            .filter(|s| s.powered_on)
            .map(|s| s.id())
            .collect()
    }

    /// Powered-off server ids in ascending order.
    pub fn off_pool(&self) -> Vec<ServerId> {
        self.servers
            .iter()
            .filter(|s| !s.powered_on)
            .map(|s| s.id())
            .collect()
    }

    pub fn active_count(&self) -> usize {
        self.servers.iter().filter(|s| s.powered_on).count()
    }

    pub fn level(&self, id: ServerId) -> Option<LoadLevel> {
        self.levels.get(&id).copied()
    }

    pub fn levels(&self) -> &BTreeMap<ServerId, LoadLevel> {
        &self.levels
    }

    pub fn view(&self, id: ServerId) -> Option<&ResourceVector> {
        self.views.get(&id)
    }

    /// Mean of the clamped view components; the placement ordering key.
    pub fn mean_view_utilization(&self, id: ServerId) -> f64 {
        self.views
            .get(&id)
            .map(|v| UtilizationVector::from_raw(v).mean())
            .unwrap_or(0.0)
    }

    fn next_server_id(&self) -> ServerId {
        ServerId(self.servers.iter().map(|s| s.id().0).max().unwrap_or(0) + 1)
    }

    /// The spec cloned when the domain expands: the capacity-ordered median
    /// server's capacities under a fresh id.
    pub fn median_spec(&self) -> ServerSpec {
        assert!(!self.servers.is_empty());
        let mut ordered: Vec<&ServerState> = self.servers.iter().collect();
        ordered.sort_by(|a, b| {
            let ka = (
                a.spec.cpu_capacity,
                a.spec.mem_capacity,
                a.spec.disk_capacity,
                a.spec.bw_capacity,
            );
            let kb = (
                b.spec.cpu_capacity,
                b.spec.mem_capacity,
                b.spec.disk_capacity,
                b.spec.bw_capacity,
            );
            ka.partial_cmp(&kb).unwrap().then(a.id().cmp(&b.id()))
        });
        let template = &ordered[(ordered.len() - 1) / 2].spec;
        ServerSpec::new(
            self.next_server_id(),
            template.cpu_capacity,
            template.mem_capacity,
            template.disk_capacity,
            template.bw_capacity,
        )
    }

    fn classify_view(system: &FuzzySystem, view: &ResourceVector) -> LoadLevel {
        let forecast = ForecastVector::new(view.cpu, view.mem, view.disk, view.bw);
        system
            .classify(&forecast)
            .expect("clamped forecast is always classifiable")
    }

    /// Replaces a powered-on server's classification view (typically with a
    /// fresh forecast) and recomputes its level.
    pub fn set_view(&mut self, id: ServerId, view: ResourceVector, system: &FuzzySystem) {
        debug_assert!(self.server(id).map(|s| s.powered_on).unwrap_or(false));
        self.levels.insert(id, Self::classify_view(system, &view));
        self.views.insert(id, view);
    }

    /// Re-derives a server's view from its measured utilization.
    pub fn refresh_view_from_measurement(&mut self, id: ServerId, system: &FuzzySystem) {
        let raw = match self.server(id) {
            Ok(s) if s.powered_on => s.raw_utilization(),
            _ => return,
        };
        self.set_view(id, raw, system);
    }

    fn shift_view(
        &mut self,
        id: ServerId,
        cost: &ResourceVector,
        added: bool,
        system: &FuzzySystem,
    ) -> Result<(), BalancerError> {
        let caps = self.server(id)?.spec.capacities();
        let delta = cost.div(&caps);
        let view = self
            .views
            .get(&id)
            .copied()
            .ok_or(BalancerError::UnknownServer { server: id })?;
        let next = if added {
            view.add(&delta)
        } else {
            view.saturating_sub(&delta)
        };
        self.set_view(id, next, system);
        Ok(())
    }

    /// The level this server would hold after gaining `cost`.
    pub fn level_after_adding(
        &self,
        id: ServerId,
        cost: &ResourceVector,
        system: &FuzzySystem,
    ) -> Result<LoadLevel, BalancerError> {
        let caps = self.server(id)?.spec.capacities();
        let view = self
            .views
            .get(&id)
            .copied()
            .ok_or(BalancerError::ServerPoweredOff { server: id })?;
        Ok(Self::classify_view(system, &view.add(&cost.div(&caps))))
    }

    /// Applies one action, keeping views and levels consistent.
    pub fn apply_action(
        &mut self,
        action: &Action,
        costs: &FlowCostTable,
        system: &FuzzySystem,
    ) -> Result<(), BalancerError> {
        match action {
            Action::Assign { flow, target } => {
                let cost = *costs.get(*flow)?;
                let server = self.server_mut(*target)?;
                if !server.powered_on {
                    return Err(BalancerError::ServerPoweredOff { server: *target });
                }
                server.host_flow(*flow, &cost);
                self.shift_view(*target, &cost, true, system)?;
            }
            Action::MoveFlow {
                flow,
                source,
                target,
                ..
            } => {
                let cost = *costs.get(*flow)?;
                if !self.server(*target)?.powered_on {
                    return Err(BalancerError::ServerPoweredOff { server: *target });
                }
                let source_state = self.server_mut(*source)?;
                if !source_state.evict_flow(*flow, &cost) {
                    return Err(BalancerError::NotHostingFlow {
                        server: *source,
                        flow: *flow,
                    });
                }
                self.server_mut(*target)?.host_flow(*flow, &cost);
                self.shift_view(*source, &cost, false, system)?;
                self.shift_view(*target, &cost, true, system)?;
            }
            Action::PowerOn(id) => {
                let server = self.server_mut(*id)?;
                if server.powered_on {
                    return Err(BalancerError::ServerAlreadyOn { server: *id });
                }
                server.power_on();
                self.refresh_view_from_measurement(*id, system);
            }
            Action::PowerOff(id) => {
                let server = self.server_mut(*id)?;
                if !server.powered_on {
                    return Err(BalancerError::ServerPoweredOff { server: *id });
                }
                if !server.hosted_flows.is_empty() {
                    return Err(BalancerError::StillHostingFlows { server: *id });
                }
                server.power_off();
                self.views.remove(id);
                self.levels.remove(id);
            }
            Action::AddServer(spec) => {
                if self.servers.len() >= self.controller_capacity {
                    return Err(BalancerError::CapacityExhausted {
                        capacity: self.controller_capacity,
                    });
                }
                if self.servers.iter().any(|s| s.id() == spec.id) {
                    return Err(BalancerError::DuplicateServer { server: spec.id });
                }
                self.servers.push(ServerState::new(spec.clone()));
                self.servers.sort_by_key(|s| s.id());
                self.refresh_view_from_measurement(spec.id, system);
            }
            Action::RedirectToOtherDomain { flow, from } => {
                let cost = *costs.get(*flow)?;
                if !self.server_mut(*from)?.evict_flow(*flow, &cost) {
                    return Err(BalancerError::NotHostingFlow {
                        server: *from,
                        flow: *flow,
                    });
                }
                self.shift_view(*from, &cost, false, system)?;
            }
            Action::Unresolvable { .. } | Action::PlacementFailed { .. } => {}
        }
        Ok(())
    }
}

/// Applies every plan action in order. A failing action reports its index
/// and leaves the state as of the preceding action.
pub fn apply_plan(
    state: &mut DomainState,
    plan: &MigrationPlan,
    costs: &FlowCostTable,
    system: &FuzzySystem,
) -> Result<(), BalancerError> {
    for (index, action) in plan.actions.iter().enumerate() {
        state
            .apply_action(action, costs, system)
            .map_err(|cause| BalancerError::ActionFailed {
                index,
                cause: Box::new(cause),
            })?;
    }
    Ok(())
}
