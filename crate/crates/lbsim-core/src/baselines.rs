//! Comparison policies that ignore load levels entirely: uniform random
//! selection and round-robin selection. Neither migrates load nor touches
//! power state.

use crate::balancer::DomainState;
use crate::domain::ServerId;
use crate::rng::SeededRng;
use core::fmt;

/// Baseline selection failure: no powered-on server to pick.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoServerAvailable;

impl fmt::Display for NoServerAvailable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "no powered-on server available for selection")
    }
}

impl core::error::Error for NoServerAvailable {}

/// Uniform choice over the powered-on servers from the seeded stream. May
/// well pick an over-loaded server; that is the point of the baseline.
pub fn random_select(
    state: &DomainState,
    rng: &mut SeededRng,
) -> Result<ServerId, NoServerAvailable> {
    let ids = state.powered_on_ids();
    if ids.is_empty() {
        return Err(NoServerAvailable);
    }
    Ok(ids[rng.next_index(ids.len())])
}

/// Cyclic position over the powered-on servers in id order.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RoundRobinCursor {
    pub next_index: usize,
}

/// Returns the next server in cyclic id order and the advanced cursor.
pub fn round_robin_select(
    state: &DomainState,
    cursor: RoundRobinCursor,
) -> Result<(ServerId, RoundRobinCursor), NoServerAvailable> {
    let ids = state.powered_on_ids();
    if ids.is_empty() {
        return Err(NoServerAvailable);
    }
    let index = cursor.next_index % ids.len();
    Ok((
        ids[index],
        RoundRobinCursor {
            next_index: (index + 1) % ids.len(),
        },
    ))
}
