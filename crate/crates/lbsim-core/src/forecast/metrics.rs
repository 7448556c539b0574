//! Forecast accuracy metrics: RMSE, MAE and the coefficient of
//! determination.

use super::ForecastError;
use libm::{fabs, sqrt};

/// Error metrics of a predicted series against the actual one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalMetrics {
    pub rmse: f64,
    pub mae: f64,
    pub r2: f64,
}

/// Computes RMSE, MAE and R² against the actual series.
///
/// R² is `1 - SSres/SStot` with SStot taken about the actual mean. When the
/// actual series is constant (SStot = 0) the score degenerates to 1 for a
/// perfect prediction and 0 otherwise.
pub fn evaluate(actual: &[f64], predicted: &[f64]) -> Result<EvalMetrics, ForecastError> {
    if actual.len() != predicted.len() {
        return Err(ForecastError::LengthMismatch {
            actual: actual.len(),
            predicted: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(ForecastError::EmptySeries);
    }
    let n = actual.len() as f64;
    let mut sq_sum = 0.0;
    let mut abs_sum = 0.0;
    for (&a, &p) in actual.iter().zip(predicted) {
        let err = p - a;
        sq_sum += err * err;
        abs_sum += fabs(err);
    }
    let ss_res = sq_sum;
    let mean = actual.iter().sum::<f64>() / n;
    let ss_tot: f64 = actual.iter().map(|&a| (a - mean) * (a - mean)).sum();
    let r2 = if ss_tot > 0.0 {
        1.0 - ss_res / ss_tot
    } else if ss_res == 0.0 {
        1.0
    } else {
        0.0
    };
    Ok(EvalMetrics {
        rmse: sqrt(sq_sum / n),
        mae: abs_sum / n,
        r2,
    })
}
