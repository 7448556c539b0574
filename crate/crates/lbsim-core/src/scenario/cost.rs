//! Mapping from flow rate to server resource load.

use crate::domain::{FlowEvent, ResourceVector, MEGABYTE};

/// Linear cost model: a flow of rate r MB/s occupies `bw_scale * r` MB/s of
/// server bandwidth, `cpu_ghz_per_mbs * r` GHz of compute,
/// `mem_mb_per_mbs * r` MB of memory and `disk_mb_per_mbs * r` MB of disk
/// for as long as it runs.
///
/// The defaults are calibrated so the 26-flow reference scenario drives the
/// heterogeneous server set through all four load levels: balanced
/// placement ends with every server highly loaded but none over-loaded,
/// while level-blind policies push the small servers over the top.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CostModel {
    pub bw_scale: f64,
    pub cpu_ghz_per_mbs: f64,
    pub mem_mb_per_mbs: f64,
    pub disk_mb_per_mbs: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            bw_scale: 0.25,
            cpu_ghz_per_mbs: 0.0128,
            mem_mb_per_mbs: 2.7,
            disk_mb_per_mbs: 9.0,
        }
    }
}

impl CostModel {
    /// Absolute load one flow adds to whichever server hosts it.
    pub fn flow_cost(&self, flow: &FlowEvent) -> ResourceVector {
        let mbs = flow.rate_mbs();
        ResourceVector::new(
            self.cpu_ghz_per_mbs * mbs,
            self.mem_mb_per_mbs * mbs * MEGABYTE,
            self.disk_mb_per_mbs * mbs * MEGABYTE,
            self.bw_scale * flow.rate_bytes_per_s,
        )
    }
}
