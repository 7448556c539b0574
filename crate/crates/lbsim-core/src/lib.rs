//! Core library for a software-defined multimedia-IoT server load-balancing
//! simulator.
//!
//! The pipeline mirrors the control loop of an SDN domain controller:
//!
//! 1. [`domain`] — measure per-server resource consumption and normalize it
//!    into `[0, 1]` utilization fractions (CPU, memory, disk, bandwidth).
//! 2. [`forecast`] — predict next-step utilization per metric with a small
//!    LSTM trained from scratch (BPTT + Adam, min-max scaling).
//! 3. [`fuzzy`] — classify forecasts into four load levels with a Mamdani
//!    inference system (triangular memberships, 81 rules, centroid).
//! 4. [`balancer`] — place incoming flows, migrate load off over-loaded and
//!    highly-loaded servers, consolidate under-loaded servers and power them
//!    off.
//! 5. [`scenario`] — drive the measure → forecast → classify → balance loop
//!    over a flow arrival sequence and record an auditable trace.
//!
//! [`baselines`] provides level-oblivious random and round-robin selection
//! for comparison runs.
//!
//! The crate is `no_std` + `alloc`: every component is pure computation and
//! all randomness flows from explicit seeds, so identical inputs produce
//! bit-identical results. IO, the CLI, and file formats live in the
//! companion `lbsim-cli` crate.
//!
//! ```
//! use lbsim_core::domain::LoadLevel;
//! use lbsim_core::scenario::{reference_scenario, run, SimConfig};
//!
//! let output = run(&reference_scenario(), &SimConfig::default()).unwrap();
//! assert_eq!(output.trace.records.len(), 27);
//! assert!(!output.trace.level_ever_reached(LoadLevel::OverLoad));
//! ```

#![cfg_attr(not(test), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod balancer;
pub mod baselines;
pub mod domain;
pub mod forecast;
pub mod fuzzy;
pub mod rng;
pub mod scenario;

pub use domain::{
    FlowEvent, FlowId, LoadLevel, ResourceVector, SaturationFlags, ServerId, ServerSpec,
    ServerState, UtilizationVector, WindowMatrix,
};
