//! Plan construction for placement, relief migration and consolidation.

use super::{
    Action, BalancerConfig, DomainState, FlowCostTable, MigrationPlan, PlanTrigger,
    TransferRule,
};
use crate::domain::{FlowId, LoadLevel, ResourceVector, ServerId};
use crate::fuzzy::FuzzySystem;
use alloc::collections::BTreeSet;
use alloc::vec::Vec;

/// Scratch domain plus the actions recorded against it.
struct Planner {
    scratch: DomainState,
    actions: Vec<Action>,
}

impl Planner {
    fn new(state: &DomainState) -> Self {
        Self {
            scratch: state.clone(),
            actions: Vec::new(),
        }
    }

    fn push(&mut self, action: Action, costs: &FlowCostTable, system: &FuzzySystem) {
        self.scratch
            .apply_action(&action, costs, system)
            .expect("planned action must apply to scratch state");
        self.actions.push(action);
    }

    fn finish(self, trigger: PlanTrigger, chosen_target: Option<ServerId>) -> MigrationPlan {
        MigrationPlan {
            trigger,
            actions: self.actions,
            chosen_target,
        }
    }
}

/// Servers at `level`, ordered by ascending mean view utilization then id.
fn ordered_class(state: &DomainState, level: LoadLevel, exclude: Option<ServerId>) -> Vec<ServerId> {
    let mut ids: Vec<ServerId> = state
        .powered_on_ids()
        .into_iter()
        .filter(|&id| Some(id) != exclude && state.level(id) == Some(level))
        .collect();
    ids.sort_by(|&a, &b| {
        state
            .mean_view_utilization(a)
            .total_cmp(&state.mean_view_utilization(b))
            .then(a.cmp(&b))
    });
    ids
}

/// Chooses the host for a newly arrived flow.
///
/// Candidate classes are scanned under-load first, then normal-load, then
/// highly-load; inside a class the server with the lowest mean utilization
/// wins, ties to the lowest id. A candidate only stands if the placement
/// leaves it below over-load. When no powered-on server qualifies the plan
/// escalates: power on a reserve server, then expand the domain, and
/// finally record a placement failure.
pub fn select_server_for_flow(
    state: &DomainState,
    flow: FlowId,
    costs: &FlowCostTable,
    system: &FuzzySystem,
    _config: &BalancerConfig,
) -> MigrationPlan {
    let cost = *costs.get(flow).expect("incoming flow must have a cost");
    let mut planner = Planner::new(state);

    let fits = |planner: &Planner, id: ServerId| {
        planner
            .scratch
            .level_after_adding(id, &cost, system)
            .map(|after| after != LoadLevel::OverLoad)
            .unwrap_or(false)
    };

    for class in [
        LoadLevel::UnderLoad,
        LoadLevel::NormalLoad,
        LoadLevel::HighlyLoad,
    ] {
        for id in ordered_class(&planner.scratch, class, None) {
            if fits(&planner, id) {
                planner.push(Action::Assign { flow, target: id }, costs, system);
                return planner.finish(PlanTrigger::Placement, Some(id));
            }
        }
    }

    // A fresh (zero-load) server's post-placement level depends only on
    // its capacities, so reserves are vetted before anything powers on.
    let fresh_fits = |caps: &ResourceVector| {
        let util = cost.div(caps);
        let forecast = crate::forecast::ForecastVector::new(util.cpu, util.mem, util.disk, util.bw);
        system.classify(&forecast).expect("clamped input") != LoadLevel::OverLoad
    };

    // Power a reserve server back on for the flow.
    for id in planner.scratch.off_pool() {
        let caps = planner
            .scratch
            .server(id)
            .expect("off-pool id exists")
            .spec
            .capacities();
        if fresh_fits(&caps) {
            planner.push(Action::PowerOn(id), costs, system);
            planner.push(Action::Assign { flow, target: id }, costs, system);
            return planner.finish(PlanTrigger::Placement, Some(id));
        }
    }

    // Expand the domain within the controller's capacity.
    if planner.scratch.servers().len() < planner.scratch.controller_capacity() {
        let spec = planner.scratch.median_spec();
        if fresh_fits(&spec.capacities()) {
            let id = spec.id;
            planner.push(Action::AddServer(spec), costs, system);
            planner.push(Action::Assign { flow, target: id }, costs, system);
            return planner.finish(PlanTrigger::Placement, Some(id));
        }
    }

    planner.push(Action::PlacementFailed { flow }, costs, system);
    planner.finish(PlanTrigger::Placement, None)
}

/// Migration target candidates (the set τ): powered-on servers at
/// under-load or normal-load, under-loaded first, each class ordered by
/// ascending mean utilization then id. Over-loaded and highly-loaded
/// servers are never receivers.
pub fn candidate_targets(state: &DomainState, source: ServerId) -> Vec<ServerId> {
    let mut ids = ordered_class(state, LoadLevel::UnderLoad, Some(source));
    ids.extend(ordered_class(state, LoadLevel::NormalLoad, Some(source)));
    ids
}

/// Best migration target for `cost` under the three-condition priority:
/// C1 under→under, then C2 under→normal, then C3 normal→normal. Within a
/// condition the least-utilized server wins, ties to the lowest id.
fn best_condition_target(
    state: &DomainState,
    source: ServerId,
    cost: &ResourceVector,
    system: &FuzzySystem,
) -> Option<(ServerId, TransferRule)> {
    for (current, after, rule) in [
        (
            LoadLevel::UnderLoad,
            LoadLevel::UnderLoad,
            TransferRule::UnderToUnder,
        ),
        (
            LoadLevel::UnderLoad,
            LoadLevel::NormalLoad,
            TransferRule::UnderToNormal,
        ),
        (
            LoadLevel::NormalLoad,
            LoadLevel::NormalLoad,
            TransferRule::NormalToNormal,
        ),
    ] {
        for id in ordered_class(state, current, Some(source)) {
            if state.level_after_adding(id, cost, system) == Ok(after) {
                return Some((id, rule));
            }
        }
    }
    None
}

#[allow(clippy::too_many_arguments)]
fn plan_relief(
    state: &DomainState,
    source: ServerId,
    threshold: LoadLevel,
    trigger: PlanTrigger,
    allow_expand: bool,
    costs: &FlowCostTable,
    system: &FuzzySystem,
    config: &BalancerConfig,
) -> MigrationPlan {
    let mut planner = Planner::new(state);
    let mut chosen_target = None;

    loop {
        match planner.scratch.level(source) {
            Some(level) if level >= threshold => {}
            _ => break,
        }
        let Some(flow) = planner
            .scratch
            .server(source)
            .ok()
            .and_then(|s| s.newest_flow())
        else {
            // Nothing left to shed; only possible on hand-built states.
            if allow_expand {
                planner.push(Action::Unresolvable { server: source }, costs, system);
            }
            break;
        };
        let cost = *costs.get(flow).expect("hosted flow must have a cost");

        if let Some((target, rule)) = best_condition_target(&planner.scratch, source, &cost, system)
        {
            planner.push(
                Action::MoveFlow {
                    flow,
                    source,
                    target,
                    rule,
                },
                costs,
                system,
            );
            chosen_target = Some(target);
            continue;
        }

        // No eligible target: wake a powered-off server and transfer to it,
        // preferring a condition match once it is online.
        if let Some(&off) = planner.scratch.off_pool().first() {
            planner.push(Action::PowerOn(off), costs, system);
            let (target, rule) = best_condition_target(&planner.scratch, source, &cost, system)
                .unwrap_or((off, TransferRule::Takeover));
            planner.push(
                Action::MoveFlow {
                    flow,
                    source,
                    target,
                    rule,
                },
                costs,
                system,
            );
            chosen_target = Some(target);
            continue;
        }

        if !allow_expand {
            // Highly-loaded sources neither redirect nor grow the domain.
            break;
        }

        if config.other_domains_available {
            planner.push(
                Action::RedirectToOtherDomain { flow, from: source },
                costs,
                system,
            );
            continue;
        }

        if planner.scratch.servers().len() < planner.scratch.controller_capacity() {
            let spec = planner.scratch.median_spec();
            let id = spec.id;
            planner.push(Action::AddServer(spec), costs, system);
            let (target, rule) = best_condition_target(&planner.scratch, source, &cost, system)
                .unwrap_or((id, TransferRule::Takeover));
            planner.push(
                Action::MoveFlow {
                    flow,
                    source,
                    target,
                    rule,
                },
                costs,
                system,
            );
            chosen_target = Some(target);
            continue;
        }

        planner.push(Action::Unresolvable { server: source }, costs, system);
        break;
    }

    planner.finish(trigger, chosen_target)
}

/// Sheds the most recently placed flows off an over-loaded server one at a
/// time until it leaves over-load, falling back to power-on, redirection
/// and domain expansion in that order.
pub fn plan_overload_migration(
    state: &DomainState,
    source: ServerId,
    costs: &FlowCostTable,
    system: &FuzzySystem,
    config: &BalancerConfig,
) -> MigrationPlan {
    plan_relief(
        state,
        source,
        LoadLevel::OverLoad,
        PlanTrigger::OverloadRelief,
        true,
        costs,
        system,
        config,
    )
}

/// Like over-load relief, but a highly-loaded source neither redirects load
/// nor expands the domain: with no target and no reserve the plan stays
/// empty and the domain unchanged.
pub fn plan_highlyload_migration(
    state: &DomainState,
    source: ServerId,
    costs: &FlowCostTable,
    system: &FuzzySystem,
    config: &BalancerConfig,
) -> MigrationPlan {
    plan_relief(
        state,
        source,
        LoadLevel::HighlyLoad,
        PlanTrigger::HighlyLoadRelief,
        false,
        costs,
        system,
        config,
    )
}

/// Consolidates under-loaded servers: while some under-loaded server's
/// entire load fits on another under-loaded server that stays under-loaded,
/// move everything and power the source off.
///
/// Sources are visited in ascending load (ties to the higher id, so the
/// lowest-numbered servers stay online); each round pairs disjoint servers,
/// and the powered-on count never drops below the configured floor.
pub fn consolidate_underload(
    state: &DomainState,
    costs: &FlowCostTable,
    system: &FuzzySystem,
    config: &BalancerConfig,
) -> MigrationPlan {
    let mut planner = Planner::new(state);
    let mut used: BTreeSet<ServerId> = BTreeSet::new();

    loop {
        if planner.scratch.active_count() <= config.min_active.max(1) {
            break;
        }
        let mut sources: Vec<ServerId> = planner
            .scratch
            .powered_on_ids()
            .into_iter()
            .filter(|id| !used.contains(id))
            .filter(|&id| planner.scratch.level(id) == Some(LoadLevel::UnderLoad))
            .collect();
        sources.sort_by(|&a, &b| {
            planner
                .scratch
                .mean_view_utilization(a)
                .total_cmp(&planner.scratch.mean_view_utilization(b))
                .then(b.cmp(&a))
        });

        let mut pair = None;
        'search: for &source in &sources {
            let flows = planner
                .scratch
                .server(source)
                .expect("source exists")
                .hosted_flows
                .clone();
            let mut total = ResourceVector::ZERO;
            for &flow in &flows {
                total = total.add(costs.get(flow).expect("hosted flow must have a cost"));
            }
            for target in ordered_class(&planner.scratch, LoadLevel::UnderLoad, Some(source)) {
                if used.contains(&target) {
                    continue;
                }
                if planner.scratch.level_after_adding(target, &total, system)
                    == Ok(LoadLevel::UnderLoad)
                {
                    pair = Some((source, target, flows));
                    break 'search;
                }
            }
        }

        let Some((source, target, flows)) = pair else {
            break;
        };
        for flow in flows {
            planner.push(
                Action::MoveFlow {
                    flow,
                    source,
                    target,
                    rule: TransferRule::Consolidation,
                },
                costs,
                system,
            );
        }
        planner.push(Action::PowerOff(source), costs, system);
        used.insert(source);
        used.insert(target);
    }

    planner.finish(PlanTrigger::Consolidation, None)
}

/// Relief sources in processing order: descending mean utilization, ties to
/// the lower id.
pub fn relief_sources(state: &DomainState, level: LoadLevel) -> Vec<ServerId> {
    let mut ids: Vec<ServerId> = state
        .powered_on_ids()
        .into_iter()
        .filter(|&id| state.level(id) == Some(level))
        .collect();
    ids.sort_by(|&a, &b| {
        state
            .mean_view_utilization(b)
            .total_cmp(&state.mean_view_utilization(a))
            .then(a.cmp(&b))
    });
    ids
}
