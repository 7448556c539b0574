//! Mamdani fuzzy inference mapping forecast utilization to a load level.
//!
//! Three triangular terms (low, medium, high) partition each input's
//! `[0, 1]` domain; an 81-rule base covers every antecedent combination;
//! min firing, max aggregation and centroid defuzzification over the
//! `[-0.6, 0.4]` output domain produce a crisp value that the nearest
//! output center converts to one of the four load levels.

mod engine;
mod membership;
mod rules;

pub use engine::{classify_servers, FuzzySystem, Inference, OutputPartition};
pub use membership::{InputPartition, TriangularMf};
pub use rules::{build_rule_base, FuzzyRule, LinguisticTerm, RuleBase};

use crate::domain::ServerId;
use core::fmt;

/// Errors from fuzzification and classification.
#[derive(Clone, Debug, PartialEq)]
pub enum FuzzyError {
    /// Input outside the `[0, 1]` domain; upstream is expected to clamp.
    OutOfDomain { value: f64 },
    /// A powered-on server has no forecast to classify.
    MissingForecast { server: ServerId },
}

impl fmt::Display for FuzzyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FuzzyError::OutOfDomain { value } => {
                write!(f, "fuzzy input {value} is outside [0, 1]")
            }
            FuzzyError::MissingForecast { server } => {
                write!(f, "no forecast available for powered-on server {server}")
            }
        }
    }
}

impl core::error::Error for FuzzyError {}
