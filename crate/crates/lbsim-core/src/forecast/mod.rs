//! Next-step utilization forecasting with a small LSTM trained from scratch.
//!
//! One independent model is trained per (server, metric) pair. Training
//! min-max scales the series (scaler fit on the training split only),
//! builds sliding supervised windows, and runs truncated backpropagation
//! through time with Adam updates in strict chronological order. Everything
//! is seeded and single-threaded per model, so training is bit-reproducible.

mod adam;
mod cell;
mod metrics;
mod scaler;
mod train;

pub use adam::{adam_step, AdamHyper, AdamMoments};
pub use cell::{lstm_backward, lstm_forward, ForwardCache, LstmParameters, TensorShape};
pub use metrics::{evaluate, EvalMetrics};
pub use scaler::SeriesScaler;
pub use train::{
    make_supervised, min_series_len, predict_next, predict_next_fraction, train_forecaster,
    ForecasterModel,
};

use crate::domain::Metric;
use core::fmt;

/// Per-metric lookback window lengths.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Lookbacks {
    pub cpu: usize,
    pub mem: usize,
    pub disk: usize,
    pub bw: usize,
}

impl Default for Lookbacks {
    fn default() -> Self {
        Self {
            cpu: 5,
            mem: 2,
            disk: 5,
            bw: 5,
        }
    }
}

impl Lookbacks {
    pub fn get(&self, metric: Metric) -> usize {
        match metric {
            Metric::Cpu => self.cpu,
            Metric::Mem => self.mem,
            Metric::Disk => self.disk,
            Metric::Bw => self.bw,
        }
    }

    pub fn max(&self) -> usize {
        self.cpu.max(self.mem).max(self.disk).max(self.bw)
    }
}

/// Forecaster configuration covering all four metric models.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmConfig {
    pub hidden_units: usize,
    pub num_layers: usize,
    pub lookback: Lookbacks,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub train_fraction: f64,
    pub rng_seed: u64,
}

impl Default for LstmConfig {
    fn default() -> Self {
        Self {
            hidden_units: 5,
            num_layers: 1,
            lookback: Lookbacks::default(),
            epochs: 15,
            batch_size: 1,
            learning_rate: 0.001,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            train_fraction: 0.8,
            rng_seed: 42,
        }
    }
}

impl LstmConfig {
    /// Single-model hyperparameters for one metric's forecaster.
    pub fn model_for(&self, metric: Metric) -> ModelConfig {
        ModelConfig {
            hidden_units: self.hidden_units,
            num_layers: self.num_layers,
            lookback: self.lookback.get(metric),
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            adam_beta1: self.adam_beta1,
            adam_beta2: self.adam_beta2,
            adam_epsilon: self.adam_epsilon,
            train_fraction: self.train_fraction,
            seed: self.rng_seed,
        }
    }
}

/// Hyperparameters of one trained model instance.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelConfig {
    pub hidden_units: usize,
    pub num_layers: usize,
    pub lookback: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        LstmConfig::default().model_for(Metric::Cpu)
    }
}

impl ModelConfig {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_lookback(mut self, lookback: usize) -> Self {
        self.lookback = lookback;
        self
    }

    pub fn adam_hyper(&self) -> AdamHyper {
        AdamHyper {
            learning_rate: self.learning_rate,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            epsilon: self.adam_epsilon,
        }
    }
}

/// Predicted next-step utilization fractions, clamped to `[0, 1]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ForecastVector {
    pub cpu: f64,
    pub mem: f64,
    pub disk: f64,
    pub bw: f64,
}

impl ForecastVector {
    pub fn new(cpu: f64, mem: f64, disk: f64, bw: f64) -> Self {
        Self {
            cpu: cpu.clamp(0.0, 1.0),
            mem: mem.clamp(0.0, 1.0),
            disk: disk.clamp(0.0, 1.0),
            bw: bw.clamp(0.0, 1.0),
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
}

/// Outcome of one training run, evaluated on the held-out split in the
/// series' original units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainingReport {
    pub rmse: f64,
    pub mae: f64,
    pub r2: f64,
    pub epochs_run: usize,
    pub final_loss: f64,
}

/// Errors from the forecasting pipeline.
#[derive(Clone, Debug, PartialEq)]
pub enum ForecastError {
    /// Scaler fit over an empty series.
    EmptySeries,
    /// A non-finite value appeared in input data.
    NonFiniteInput,
    /// Training series shorter than the split + lookback requirements.
    SeriesTooShort { len: usize, min: usize },
    /// Supervised windowing needs strictly more samples than the lookback.
    WindowTooShort { len: usize, lookback: usize },
    /// `predict_next` called with the wrong number of recent values.
    WrongWindowLength { expected: usize, got: usize },
    /// A forward-pass intermediate diverged.
    NonFinite {
        layer: usize,
        step: usize,
        what: &'static str,
    },
    /// Backward pass invoked with a cache from a different shape.
    CacheMismatch,
    /// Metric evaluation over series of different lengths.
    LengthMismatch { actual: usize, predicted: usize },
}

impl fmt::Display for ForecastError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ForecastError::EmptySeries => write!(f, "cannot fit a scaler on an empty series"),
            ForecastError::NonFiniteInput => write!(f, "input series contains a non-finite value"),
            ForecastError::SeriesTooShort { len, min } => {
                write!(f, "series of length {len} is too short; at least {min} samples required")
            }
            ForecastError::WindowTooShort { len, lookback } => {
                write!(f, "series of length {len} cannot form windows of lookback {lookback}")
            }
            ForecastError::WrongWindowLength { expected, got } => {
                write!(f, "expected {expected} recent values, got {got}")
            }
            ForecastError::NonFinite { layer, step, what } => {
                write!(f, "non-finite {what} at layer {layer}, step {step}")
            }
            ForecastError::CacheMismatch => {
                write!(f, "forward cache does not match parameter shapes")
            }
            ForecastError::LengthMismatch { actual, predicted } => {
                write!(f, "actual series has {actual} points but predicted has {predicted}")
            }
        }
    }
}

impl core::error::Error for ForecastError {}
