//! Adam parameter updates with bias correction.

use alloc::vec;
use alloc::vec::Vec;
use libm::sqrt;

/// Optimizer hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdamHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

/// First and second moment estimates, one slot per parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamMoments {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamMoments {
    pub fn zeros(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }
}

/// One Adam step: decays the moments with the new gradient and applies the
/// bias-corrected update in place. `t` is the 1-based step index.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    moments: &mut AdamMoments,
    hyper: &AdamHyper,
    t: u64,
) {
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), moments.m.len());
    assert!(t >= 1, "Adam step index is 1-based");
    let b1 = hyper.beta1;
    let b2 = hyper.beta2;
    let m_corr = 1.0 - powi(b1, t);
    let v_corr = 1.0 - powi(b2, t);
    for k in 0..params.len() {
        let g = grads[k];
        moments.m[k] = b1 * moments.m[k] + (1.0 - b1) * g;
        moments.v[k] = b2 * moments.v[k] + (1.0 - b2) * g * g;
        let m_hat = moments.m[k] / m_corr;
        let v_hat = moments.v[k] / v_corr;
        params[k] -= hyper.learning_rate * m_hat / (sqrt(v_hat) + hyper.epsilon);
    }
}

fn powi(base: f64, exp: u64) -> f64 {
    let mut acc = 1.0;
    let mut base = base;
    let mut exp = exp;
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= base;
        }
        base *= base;
        exp >>= 1;
    }
    acc
}
