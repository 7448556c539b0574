//! Command-line driver for the load-balancing simulator: configuration
//! ingestion, scenario execution, and emission of traces, metrics, plot
//! data and trained forecaster parameters.

pub mod config;
pub mod output;
pub mod params_io;
pub mod runner;
