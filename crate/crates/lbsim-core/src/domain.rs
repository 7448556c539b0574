//! Core domain types: servers, flows, utilization vectors and the sliding
//! consumption window.
//!
//! Loads are carried in absolute units (GHz for CPU, bytes for memory and
//! disk, bytes/s for bandwidth) and normalized against per-server capacity
//! into `[0, 1]` fractions. Normalization clamps rather than errors so the
//! balancing loop keeps running on over-committed servers; clamped
//! components are reported through [`SaturationFlags`].

use alloc::collections::VecDeque;
use alloc::vec::Vec;
use core::fmt;

/// 10^6 bytes, the "MB" of the scenario and capacity tables.
pub const MEGABYTE: f64 = 1e6;
/// 10^9 bytes.
pub const GIGABYTE: f64 = 1e9;

/// Identifier of one server inside a domain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ServerId(pub u32);

impl fmt::Display for ServerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

/// Identifier of one traffic flow.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FlowId(pub u32);

impl fmt::Display for FlowId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.0)
    }
}

/// The four monitored resource metrics, in canonical row order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Metric {
    Cpu,
    Mem,
    Disk,
    Bw,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Cpu, Metric::Mem, Metric::Disk, Metric::Bw];

    pub fn index(self) -> usize {
        match self {
            Metric::Cpu => 0,
            Metric::Mem => 1,
            Metric::Disk => 2,
            Metric::Bw => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::Cpu => "cpu",
            Metric::Mem => "mem",
            Metric::Disk => "disk",
            Metric::Bw => "bw",
        }
    }
}

/// Raw per-metric quantity: a load, a capacity, or a flow cost.
///
/// Unlike [`UtilizationVector`] the components are unbounded, so these
/// vectors support exact add/subtract arithmetic for hypothetical load
/// moves.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ResourceVector {
    pub cpu: f64,
    pub mem: f64,
    pub disk: f64,
    pub bw: f64,
}

impl ResourceVector {
    pub const ZERO: ResourceVector = ResourceVector {
        cpu: 0.0,
        mem: 0.0,
        disk: 0.0,
        bw: 0.0,
    };

    pub fn new(cpu: f64, mem: f64, disk: f64, bw: f64) -> Self {
        Self { cpu, mem, disk, bw }
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Cpu => self.cpu,
            Metric::Mem => self.mem,
            Metric::Disk => self.disk,
            Metric::Bw => self.bw,
        }
    }

    pub fn add(&self, other: &ResourceVector) -> ResourceVector {
        ResourceVector {
            cpu: self.cpu + other.cpu,
            mem: self.mem + other.mem,
            disk: self.disk + other.disk,
            bw: self.bw + other.bw,
        }
    }

    /// Component-wise subtraction, floored at zero to absorb float residue.
    pub fn saturating_sub(&self, other: &ResourceVector) -> ResourceVector {
        ResourceVector {
            cpu: (self.cpu - other.cpu).max(0.0),
            mem: (self.mem - other.mem).max(0.0),
            disk: (self.disk - other.disk).max(0.0),
            bw: (self.bw - other.bw).max(0.0),
        }
    }

    /// Component-wise division: loads over capacities, unclamped.
    pub fn div(&self, caps: &ResourceVector) -> ResourceVector {
        ResourceVector {
            cpu: self.cpu / caps.cpu,
            mem: self.mem / caps.mem,
            disk: self.disk / caps.disk,
            bw: self.bw / caps.bw,
        }
    }

    pub fn mean(&self) -> f64 {
        (self.cpu + self.mem + self.disk + self.bw) / 4.0
    }
}

/// Static capacities of one server.
#[derive(Clone, Debug, PartialEq)]
pub struct ServerSpec {
    pub id: ServerId,
    /// Compute capacity in GHz.
    pub cpu_capacity: f64,
    /// Memory capacity in bytes.
    pub mem_capacity: f64,
    /// Disk capacity in bytes.
    pub disk_capacity: f64,
    /// Network capacity in bytes/s.
    pub bw_capacity: f64,
}

impl ServerSpec {
    /// All capacities must be strictly positive.
    pub fn new(id: ServerId, cpu: f64, mem: f64, disk: f64, bw: f64) -> Self {
        assert!(
            cpu > 0.0 && mem > 0.0 && disk > 0.0 && bw > 0.0,
            "server {id} capacities must be strictly positive"
        );
        Self {
            id,
            cpu_capacity: cpu,
            mem_capacity: mem,
            disk_capacity: disk,
            bw_capacity: bw,
        }
    }

    pub fn capacities(&self) -> ResourceVector {
        ResourceVector {
            cpu: self.cpu_capacity,
            mem: self.mem_capacity,
            disk: self.disk_capacity,
            bw: self.bw_capacity,
        }
    }
}

/// Live state of one server: absolute resource consumption, power state and
/// the flows it hosts.
///
/// Invariant: a powered-off server carries zero load and no flows.
#[derive(Clone, Debug)]
pub struct ServerState {
    pub spec: ServerSpec,
    pub loads: ResourceVector,
    pub powered_on: bool,
    pub hosted_flows: Vec<FlowId>,
}

impl ServerState {
    /// Fresh powered-on server with no load.
    pub fn new(spec: ServerSpec) -> Self {
        Self {
            spec,
            loads: ResourceVector::ZERO,
            powered_on: true,
            hosted_flows: Vec::new(),
        }
    }

    pub fn id(&self) -> ServerId {
        self.spec.id
    }

    /// Adds a flow and its load. The server must be powered on.
    pub fn host_flow(&mut self, flow: FlowId, cost: &ResourceVector) {
        assert!(self.powered_on, "cannot host {flow} on powered-off {}", self.id());
        self.hosted_flows.push(flow);
        self.loads = self.loads.add(cost);
    }

    /// Removes a flow and its load. Returns false when the flow is absent.
    pub fn evict_flow(&mut self, flow: FlowId, cost: &ResourceVector) -> bool {
        match self.hosted_flows.iter().rposition(|&f| f == flow) {
            Some(pos) => {
                self.hosted_flows.remove(pos);
                self.loads = self.loads.saturating_sub(cost);
                true
            }
            None => false,
        }
    }

    /// Most recently placed flow, if any.
    pub fn newest_flow(&self) -> Option<FlowId> {
        self.hosted_flows.last().copied()
    }

    pub fn power_on(&mut self) {
        self.powered_on = true;
    }

    /// Powers the server down. All load must have been migrated away first.
    pub fn power_off(&mut self) {
        assert!(
            self.hosted_flows.is_empty(),
            "cannot power off {} while it hosts flows",
            self.id()
        );
        self.powered_on = false;
        self.loads = ResourceVector::ZERO;
    }

    /// Loads over capacities, unclamped. Zero when powered off.
    pub fn raw_utilization(&self) -> ResourceVector {
        if !self.powered_on {
            return ResourceVector::ZERO;
        }
        self.loads.div(&self.spec.capacities())
    }
}

/// Normalized utilization fractions, one per metric, each in `[0, 1]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct UtilizationVector {
    pub cpu: f64,
    pub mem: f64,
    pub disk: f64,
    pub bw: f64,
}

impl UtilizationVector {
    pub const ZERO: UtilizationVector = UtilizationVector {
        cpu: 0.0,
        mem: 0.0,
        disk: 0.0,
        bw: 0.0,
    };

    /// Clamps raw fractions into `[0, 1]`.
    pub fn from_raw(raw: &ResourceVector) -> Self {
        Self {
            cpu: raw.cpu.clamp(0.0, 1.0),
            mem: raw.mem.clamp(0.0, 1.0),
            disk: raw.disk.clamp(0.0, 1.0),
            bw: raw.bw.clamp(0.0, 1.0),
        }
    }

    pub fn get(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Cpu => self.cpu,
            Metric::Mem => self.mem,
            Metric::Disk => self.disk,
            Metric::Bw => self.bw,
        }
    }

    pub fn mean(&self) -> f64 {
        (self.cpu + self.mem + self.disk + self.bw) / 4.0
    }
}

/// Which components were clamped down to 1.0 during normalization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SaturationFlags {
    pub cpu: bool,
    pub mem: bool,
    pub disk: bool,
    pub bw: bool,
}

impl SaturationFlags {
    pub fn any(&self) -> bool {
        self.cpu || self.mem || self.disk || self.bw
    }
}

/// Normalizes a server's absolute loads into utilization fractions.
///
/// Each component is load over capacity, clamped to `[0, 1]`; components
/// that exceeded capacity are flagged. A powered-off server yields the zero
/// vector.
pub fn normalize_utilization(state: &ServerState) -> (UtilizationVector, SaturationFlags) {
    let raw = state.raw_utilization();
    let util = UtilizationVector::from_raw(&raw);
    let flags = SaturationFlags {
        cpu: raw.cpu > 1.0,
        mem: raw.mem > 1.0,
        disk: raw.disk > 1.0,
        bw: raw.bw > 1.0,
    };
    (util, flags)
}

/// Sliding history of one server's normalized utilization: 4 metric rows by
/// up to `W` samples, oldest first.
///
/// Until `W` samples have been pushed, materialized rows are zero-filled on
/// the oldest side.
#[derive(Clone, Debug)]
pub struct WindowMatrix {
    capacity: usize,
    columns: VecDeque<[f64; 4]>,
}

/// Default window width `W`.
pub const DEFAULT_WINDOW: usize = 50;

impl WindowMatrix {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "window capacity must be positive");
        Self {
            capacity,
            columns: VecDeque::with_capacity(capacity),
        }
    }

    /// Appends a sample, dropping the oldest column once `W` are held.
    pub fn push_sample(&mut self, u: &UtilizationVector) {
        if self.columns.len() == self.capacity {
            self.columns.pop_front();
        }
        self.columns.push_back([u.cpu, u.mem, u.disk, u.bw]);
    }

    /// Number of real samples currently held (≤ `W`).
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// One metric's real samples, oldest to newest, without padding.
    pub fn series(&self, metric: Metric) -> Vec<f64> {
        let idx = metric.index();
        self.columns.iter().map(|col| col[idx]).collect()
    }

    /// The full 4×W matrix with zero-filled columns where history is short.
    pub fn rows(&self) -> [Vec<f64>; 4] {
        let pad = self.capacity - self.columns.len();
        core::array::from_fn(|row| {
            let mut out = Vec::with_capacity(self.capacity);
            out.resize(pad, 0.0);
            out.extend(self.columns.iter().map(|col| col[row]));
            out
        })
    }

    /// Drops all history, e.g. when a server powers off.
    pub fn clear(&mut self) {
        self.columns.clear();
    }
}

/// One UDP traffic flow: total volume, sending rate and datagram count.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowEvent {
    pub id: FlowId,
    pub size_bytes: u64,
    pub rate_bytes_per_s: f64,
    pub datagram_count: u64,
}

impl FlowEvent {
    pub fn new(id: FlowId, size_bytes: u64, rate_bytes_per_s: f64, datagram_count: u64) -> Self {
        assert!(size_bytes > 0, "{id} must carry at least one byte");
        assert!(datagram_count >= 1, "{id} must send at least one datagram");
        Self {
            id,
            size_bytes,
            rate_bytes_per_s,
            datagram_count,
        }
    }

    /// Flow rate in MB/s, the unit the cost model coefficients are keyed to.
    pub fn rate_mbs(&self) -> f64 {
        self.rate_bytes_per_s / MEGABYTE
    }
}

/// Fuzzy load level of a server, ordered by severity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LoadLevel {
    UnderLoad,
    NormalLoad,
    HighlyLoad,
    OverLoad,
}

impl LoadLevel {
    pub const ALL: [LoadLevel; 4] = [
        LoadLevel::UnderLoad,
        LoadLevel::NormalLoad,
        LoadLevel::HighlyLoad,
        LoadLevel::OverLoad,
    ];

    /// Stable lowercase token used in traces and config files.
    pub fn token(self) -> &'static str {
        match self {
            LoadLevel::UnderLoad => "under",
            LoadLevel::NormalLoad => "normal",
            LoadLevel::HighlyLoad => "highly",
            LoadLevel::OverLoad => "over",
        }
    }

    pub fn from_token(token: &str) -> Option<LoadLevel> {
        match token {
            "under" => Some(LoadLevel::UnderLoad),
            "normal" => Some(LoadLevel::NormalLoad),
            "highly" => Some(LoadLevel::HighlyLoad),
            "over" => Some(LoadLevel::OverLoad),
            _ => None,
        }
    }
}

impl fmt::Display for LoadLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(id: u32, cpu: f64, mem: f64, disk: f64, bw: f64) -> ServerSpec {
        ServerSpec::new(ServerId(id), cpu, mem, disk, bw)
    }

    #[test]
    fn zero_load_normalizes_to_zero() {
        let state = ServerState::new(spec(1, 1.0, 500.0 * MEGABYTE, 900.0 * MEGABYTE, 20.0 * MEGABYTE));
        let (u, sat) = normalize_utilization(&state);
        assert_eq!(u, UtilizationVector::ZERO);
        assert!(!sat.any());
    }

    #[test]
    fn half_cpu_load_normalizes_to_half() {
        let mut state = ServerState::new(spec(1, 1.0, 1.0, 1.0, 1.0));
        state.loads.cpu = 0.5;
        let (u, _) = normalize_utilization(&state);
        assert_eq!(u.cpu, 0.5);
    }

    #[test]
    fn full_memory_on_table_capacity_hits_one() {
        // Server2 memory capacity is 550 MB; a 550 MB load is exactly full.
        let mut state = ServerState::new(spec(2, 2.0, 550.0 * MEGABYTE, 2.0 * GIGABYTE, 20.0 * MEGABYTE));
        state.loads.mem = 550.0 * MEGABYTE;
        let (u, sat) = normalize_utilization(&state);
        assert_eq!(u.mem, 1.0);
        assert!(!sat.mem, "exactly-full is not saturation");
    }

    #[test]
    fn overload_clamps_and_flags() {
        let mut state = ServerState::new(spec(1, 1.0, 100.0, 100.0, 100.0));
        state.loads = ResourceVector::new(1.5, 50.0, 100.0, 250.0);
        let (u, sat) = normalize_utilization(&state);
        assert_eq!(u.cpu, 1.0);
        assert_eq!(u.mem, 0.5);
        assert_eq!(u.disk, 1.0);
        assert_eq!(u.bw, 1.0);
        assert!(sat.cpu && !sat.mem && !sat.disk && sat.bw);
    }

    #[test]
    fn powered_off_yields_zero_vector() {
        let mut state = ServerState::new(spec(1, 1.0, 1.0, 1.0, 1.0));
        state.power_off();
        let (u, sat) = normalize_utilization(&state);
        assert_eq!(u, UtilizationVector::ZERO);
        assert!(!sat.any());
    }

    #[test]
    fn normalization_is_monotone_in_load() {
        let base = ServerState::new(spec(1, 2.0, 10.0, 10.0, 10.0));
        let mut lo = base.clone();
        lo.loads.cpu = 0.4;
        let mut hi = base;
        hi.loads.cpu = 1.9;
        let (u_lo, _) = normalize_utilization(&lo);
        let (u_hi, _) = normalize_utilization(&hi);
        assert!(u_hi.cpu >= u_lo.cpu);
    }

    #[test]
    fn empty_window_pads_with_zero_columns() {
        let mut w = WindowMatrix::new(3);
        w.push_sample(&UtilizationVector {
            cpu: 0.1,
            mem: 0.2,
            disk: 0.3,
            bw: 0.4,
        });
        let rows = w.rows();
        assert_eq!(rows[0], alloc::vec![0.0, 0.0, 0.1]);
        assert_eq!(rows[1], alloc::vec![0.0, 0.0, 0.2]);
        assert_eq!(rows[2], alloc::vec![0.0, 0.0, 0.3]);
        assert_eq!(rows[3], alloc::vec![0.0, 0.0, 0.4]);
    }

    #[test]
    fn full_window_drops_oldest() {
        let mut w = WindowMatrix::new(3);
        for i in 1..=4 {
            let v = i as f64 / 10.0;
            w.push_sample(&UtilizationVector {
                cpu: v,
                mem: v,
                disk: v,
                bw: v,
            });
        }
        assert_eq!(w.len(), 3);
        assert_eq!(w.series(Metric::Cpu), alloc::vec![0.2, 0.3, 0.4]);
    }

    #[test]
    fn identical_pushes_fill_identical_columns() {
        let mut w = WindowMatrix::new(4);
        let u = UtilizationVector {
            cpu: 0.5,
            mem: 0.5,
            disk: 0.5,
            bw: 0.5,
        };
        for _ in 0..4 {
            w.push_sample(&u);
        }
        assert!(w.series(Metric::Bw).iter().all(|&v| v == 0.5));
    }

    #[test]
    fn window_never_exceeds_capacity() {
        let mut w = WindowMatrix::new(5);
        for i in 0..20 {
            w.push_sample(&UtilizationVector {
                cpu: i as f64 / 20.0,
                ..UtilizationVector::ZERO
            });
            assert!(w.len() <= 5);
        }
        assert_eq!(w.len(), 5);
    }

    #[test]
    fn flow_arithmetic_conserves_load() {
        let mut a = ServerState::new(spec(1, 4.0, 100.0, 100.0, 100.0));
        let mut b = ServerState::new(spec(2, 4.0, 100.0, 100.0, 100.0));
        let cost = ResourceVector::new(0.3, 7.0, 9.0, 2.0);
        a.host_flow(FlowId(1), &cost);
        let before = a.loads.add(&b.loads);
        assert!(a.evict_flow(FlowId(1), &cost));
        b.host_flow(FlowId(1), &cost);
        let after = a.loads.add(&b.loads);
        assert!((before.mean() - after.mean()).abs() < 1e-12);
        assert_eq!(b.hosted_flows, alloc::vec![FlowId(1)]);
    }

    #[test]
    fn level_ordering_and_tokens_round_trip() {
        assert!(LoadLevel::UnderLoad < LoadLevel::NormalLoad);
        assert!(LoadLevel::NormalLoad < LoadLevel::HighlyLoad);
        assert!(LoadLevel::HighlyLoad < LoadLevel::OverLoad);
        for level in LoadLevel::ALL {
            assert_eq!(LoadLevel::from_token(level.token()), Some(level));
        }
        assert_eq!(LoadLevel::from_token("bogus"), None);
    }
}
