//! LSTM parameters, forward evaluation and backpropagation through time.
//!
//! Parameters live in one flat `Vec<f64>` addressed through a layout: per
//! layer, the input/forget/cell/output gates each hold an input kernel
//! (H×D), a recurrent kernel (H×H) and a bias (H); a dense head (H weights
//! plus one bias) maps the final hidden state to the scalar prediction.
//! The flat representation keeps Adam, gradient checking and serialization
//! straightforward.

use super::{ForecastError, ModelConfig};
use crate::rng::SeededRng;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;
use libm::{exp, sqrt, tanh};

const GATES: usize = 4;
const GATE_NAMES: [&str; GATES] = ["in", "forget", "cell", "out"];

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + exp(-x))
}

/// Offset arithmetic over the flat parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Layout {
    hidden: usize,
    layers: usize,
}

impl Layout {
    fn input_dim(&self, layer: usize) -> usize {
        if layer == 0 {
            1
        } else {
            self.hidden
        }
    }

    fn gate_len(&self, layer: usize) -> usize {
        self.hidden * self.input_dim(layer) + self.hidden * self.hidden + self.hidden
    }

    fn layer_offset(&self, layer: usize) -> usize {
        (0..layer).map(|l| GATES * self.gate_len(l)).sum()
    }

    /// (input kernel, recurrent kernel, bias) ranges of one gate.
    fn gate_ranges(&self, layer: usize, gate: usize) -> (Range<usize>, Range<usize>, Range<usize>) {
        let d = self.input_dim(layer);
        let h = self.hidden;
        let start = self.layer_offset(layer) + gate * self.gate_len(layer);
        let w = start..start + h * d;
        let u = w.end..w.end + h * h;
        let b = u.end..u.end + h;
        (w, u, b)
    }

    fn head_w(&self) -> Range<usize> {
        let start = self.layer_offset(self.layers);
        start..start + self.hidden
    }

    fn head_b(&self) -> usize {
        self.head_w().end
    }

    fn total(&self) -> usize {
        self.head_b() + 1
    }
}

/// Shape descriptor of one named tensor inside the flat vector, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorShape {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
}

/// All trainable parameters of one forecaster model.
#[derive(Clone, Debug, PartialEq)]
pub struct LstmParameters {
    hidden_units: usize,
    num_layers: usize,
    lookback: usize,
    values: Vec<f64>,
}

impl LstmParameters {
    /// All-zero parameters (useful as a neutral baseline in tests).
    pub fn zeros(hidden_units: usize, num_layers: usize, lookback: usize) -> Self {
        assert!(hidden_units >= 1 && num_layers >= 1 && lookback >= 1);
        let layout = Layout {
            hidden: hidden_units,
            layers: num_layers,
        };
        Self {
            hidden_units,
            num_layers,
            lookback,
            values: vec![0.0; layout.total()],
        }
    }

    /// Seeded initialization: kernels uniform in `[-0.5, 0.5] / sqrt(H)`,
    /// biases zero.
    pub fn init(config: &ModelConfig) -> Self {
        let mut params = Self::zeros(config.hidden_units, config.num_layers, config.lookback);
        let layout = params.layout();
        let mut rng = SeededRng::new(config.seed);
        let scale = 1.0 / sqrt(config.hidden_units as f64);
        for layer in 0..config.num_layers {
            for gate in 0..GATES {
                let (w, u, _b) = layout.gate_ranges(layer, gate);
                for idx in w.chain(u) {
                    params.values[idx] = rng.next_range_f64(-0.5, 0.5) * scale;
                }
            }
        }
        for idx in layout.head_w() {
            params.values[idx] = rng.next_range_f64(-0.5, 0.5) * scale;
        }
        params
    }

    /// Rebuilds parameters from a flat vector, validating the length.
    pub fn from_parts(
        hidden_units: usize,
        num_layers: usize,
        lookback: usize,
        values: Vec<f64>,
    ) -> Result<Self, ForecastError> {
        let layout = Layout {
            hidden: hidden_units,
            layers: num_layers,
        };
        if hidden_units == 0 || num_layers == 0 || lookback == 0 || values.len() != layout.total() {
            return Err(ForecastError::CacheMismatch);
        }
        Ok(Self {
            hidden_units,
            num_layers,
            lookback,
            values,
        })
    }

    fn layout(&self) -> Layout {
        Layout {
            hidden: self.hidden_units,
            layers: self.num_layers,
        }
    }

    pub fn hidden_units(&self) -> usize {
        self.hidden_units
    }

    pub fn num_layers(&self) -> usize {
        self.num_layers
    }

    /// Lookback the model was trained with.
    pub fn lookback(&self) -> usize {
        self.lookback
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Named row-major tensors in storage order, for serialization.
    pub fn tensor_shapes(&self) -> Vec<TensorShape> {
        let layout = self.layout();
        let mut out = Vec::new();
        for layer in 0..self.num_layers {
            let d = layout.input_dim(layer);
            for (gate, gate_name) in GATE_NAMES.iter().enumerate() {
                let (w, u, b) = layout.gate_ranges(layer, gate);
                out.push(TensorShape {
                    name: format!("l{layer}.{gate_name}.w"),
                    rows: self.hidden_units,
                    cols: d,
                    offset: w.start,
                });
                out.push(TensorShape {
                    name: format!("l{layer}.{gate_name}.u"),
                    rows: self.hidden_units,
                    cols: self.hidden_units,
                    offset: u.start,
                });
                out.push(TensorShape {
                    name: format!("l{layer}.{gate_name}.b"),
                    rows: self.hidden_units,
                    cols: 1,
                    offset: b.start,
                });
            }
        }
        out.push(TensorShape {
            name: String::from("head.w"),
            rows: 1,
            cols: self.hidden_units,
            offset: layout.head_w().start,
        });
        out.push(TensorShape {
            name: String::from("head.b"),
            rows: 1,
            cols: 1,
            offset: layout.head_b(),
        });
        out
    }
}

/// Per-step activations recorded by the forward pass for backpropagation.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    hidden_units: usize,
    num_layers: usize,
    steps: usize,
    // [layer][step] -> vector
    inputs: Vec<Vec<Vec<f64>>>,
    gate_in: Vec<Vec<Vec<f64>>>,
    gate_forget: Vec<Vec<Vec<f64>>>,
    gate_cell: Vec<Vec<Vec<f64>>>,
    gate_out: Vec<Vec<Vec<f64>>>,
    cell: Vec<Vec<Vec<f64>>>,
    cell_tanh: Vec<Vec<Vec<f64>>>,
    hidden: Vec<Vec<Vec<f64>>>,
    prediction: f64,
}

impl ForwardCache {
    pub fn prediction(&self) -> f64 {
        self.prediction
    }
}

/// Runs the stacked LSTM over one input window and returns the dense-head
/// prediction together with the cache needed for backpropagation.
pub fn lstm_forward(
    params: &LstmParameters,
    window: &[f64],
) -> Result<(f64, ForwardCache), ForecastError> {
    let steps = window.len();
    if steps == 0 {
        return Err(ForecastError::WindowTooShort { len: 0, lookback: 1 });
    }
    let layout = params.layout();
    let h = params.hidden_units;
    let layers = params.num_layers;
    let v = &params.values;

    let mut cache = ForwardCache {
        hidden_units: h,
        num_layers: layers,
        steps,
        inputs: vec![Vec::with_capacity(steps); layers],
        gate_in: vec![Vec::with_capacity(steps); layers],
        gate_forget: vec![Vec::with_capacity(steps); layers],
        gate_cell: vec![Vec::with_capacity(steps); layers],
        gate_out: vec![Vec::with_capacity(steps); layers],
        cell: vec![Vec::with_capacity(steps); layers],
        cell_tanh: vec![Vec::with_capacity(steps); layers],
        hidden: vec![Vec::with_capacity(steps); layers],
        prediction: 0.0,
    };

    let mut h_prev = vec![vec![0.0; h]; layers];
    let mut c_prev = vec![vec![0.0; h]; layers];

    for (t, &sample) in window.iter().enumerate() {
        if !sample.is_finite() {
            return Err(ForecastError::NonFiniteInput);
        }
        let mut x = vec![sample];
        for layer in 0..layers {
            let d = layout.input_dim(layer);
            debug_assert_eq!(x.len(), d);
            let mut gates = [vec![0.0; h], vec![0.0; h], vec![0.0; h], vec![0.0; h]];
            for (gate, pre) in gates.iter_mut().enumerate() {
                let (wr, ur, br) = layout.gate_ranges(layer, gate);
                let (w, u, b) = (&v[wr], &v[ur], &v[br]);
                for row in 0..h {
                    let mut acc = b[row];
                    for (col, &xv) in x.iter().enumerate() {
                        acc += w[row * d + col] * xv;
                    }
                    for (col, &hv) in h_prev[layer].iter().enumerate() {
                        acc += u[row * h + col] * hv;
                    }
                    pre[row] = acc;
                }
            }
            let [pre_i, pre_f, pre_g, pre_o] = gates;
            let gi: Vec<f64> = pre_i.iter().map(|&p| sigmoid(p)).collect();
            let gf: Vec<f64> = pre_f.iter().map(|&p| sigmoid(p)).collect();
            let gg: Vec<f64> = pre_g.iter().map(|&p| tanh(p)).collect();
            let go: Vec<f64> = pre_o.iter().map(|&p| sigmoid(p)).collect();
            let mut c = vec![0.0; h];
            let mut ct = vec![0.0; h];
            let mut hs = vec![0.0; h];
            for k in 0..h {
                c[k] = gf[k] * c_prev[layer][k] + gi[k] * gg[k];
                ct[k] = tanh(c[k]);
                hs[k] = go[k] * ct[k];
                if !c[k].is_finite() {
                    return Err(ForecastError::NonFinite {
                        layer,
                        step: t,
                        what: "cell state",
                    });
                }
                if !hs[k].is_finite() {
                    return Err(ForecastError::NonFinite {
                        layer,
                        step: t,
                        what: "hidden state",
                    });
                }
            }
            cache.inputs[layer].push(x.clone());
            cache.gate_in[layer].push(gi);
            cache.gate_forget[layer].push(gf);
            cache.gate_cell[layer].push(gg);
            cache.gate_out[layer].push(go);
            cache.cell[layer].push(c.clone());
            cache.cell_tanh[layer].push(ct);
            cache.hidden[layer].push(hs.clone());
            c_prev[layer] = c;
            h_prev[layer] = hs.clone();
            x = hs;
        }
    }

    let head_w = &v[layout.head_w()];
    let top_h = &cache.hidden[layers - 1][steps - 1];
    let mut pred = v[layout.head_b()];
    for k in 0..h {
        pred += head_w[k] * top_h[k];
    }
    if !pred.is_finite() {
        return Err(ForecastError::NonFinite {
            layer: layers - 1,
            step: steps - 1,
            what: "prediction",
        });
    }
    cache.prediction = pred;
    Ok((pred, cache))
}

/// Gradient of the squared-error loss `(prediction - target)^2 / 2` with
/// respect to every parameter, backpropagated through time.
pub fn lstm_backward(
    params: &LstmParameters,
    cache: &ForwardCache,
    target: f64,
) -> Result<Vec<f64>, ForecastError> {
    if cache.hidden_units != params.hidden_units
        || cache.num_layers != params.num_layers
        || cache.steps == 0
    {
        return Err(ForecastError::CacheMismatch);
    }
    let layout = params.layout();
    let h = params.hidden_units;
    let layers = params.num_layers;
    let steps = cache.steps;
    let v = &params.values;
    let mut grads = vec![0.0; v.len()];

    let residual = cache.prediction - target;
    let top = layers - 1;
    let top_h = &cache.hidden[top][steps - 1];
    {
        let head_range = layout.head_w();
        for k in 0..h {
            grads[head_range.start + k] += residual * top_h[k];
        }
        grads[layout.head_b()] += residual;
    }

    // Gradient on each layer's hidden output arriving from outside the
    // layer: the dense head for the top layer, the next layer's input
    // kernels below it.
    let mut ext_dh = vec![vec![0.0; h]; steps];
    let head_w = &v[layout.head_w()];
    for k in 0..h {
        ext_dh[steps - 1][k] = residual * head_w[k];
    }

    for layer in (0..layers).rev() {
        let d = layout.input_dim(layer);
        let mut dh_carry = vec![0.0; h];
        let mut dc_carry = vec![0.0; h];
        let mut dx_all = vec![vec![0.0; d]; steps];

        for t in (0..steps).rev() {
            let gi = &cache.gate_in[layer][t];
            let gf = &cache.gate_forget[layer][t];
            let gg = &cache.gate_cell[layer][t];
            let go = &cache.gate_out[layer][t];
            let ct = &cache.cell_tanh[layer][t];
            let x = &cache.inputs[layer][t];
            let zero = vec![0.0; h];
            let c_prev = if t > 0 { &cache.cell[layer][t - 1] } else { &zero };
            let h_prev = if t > 0 { &cache.hidden[layer][t - 1] } else { &zero };

            let mut dpre = [vec![0.0; h], vec![0.0; h], vec![0.0; h], vec![0.0; h]];
            let mut new_dc_carry = vec![0.0; h];
            for k in 0..h {
                let dh = ext_dh[t][k] + dh_carry[k];
                let do_ = dh * ct[k];
                let dc = dc_carry[k] + dh * go[k] * (1.0 - ct[k] * ct[k]);
                dpre[0][k] = dc * gg[k] * gi[k] * (1.0 - gi[k]);
                dpre[1][k] = dc * c_prev[k] * gf[k] * (1.0 - gf[k]);
                dpre[2][k] = dc * gi[k] * (1.0 - gg[k] * gg[k]);
                dpre[3][k] = do_ * go[k] * (1.0 - go[k]);
                new_dc_carry[k] = dc * gf[k];
            }
            dc_carry = new_dc_carry;

            let mut new_dh_carry = vec![0.0; h];
            for (gate, dp) in dpre.iter().enumerate() {
                let (wr, ur, br) = layout.gate_ranges(layer, gate);
                for row in 0..h {
                    let dpr = dp[row];
                    if dpr == 0.0 {
                        continue;
                    }
                    for col in 0..d {
                        grads[wr.start + row * d + col] += dpr * x[col];
                        dx_all[t][col] += v[wr.start + row * d + col] * dpr;
                    }
                    for col in 0..h {
                        grads[ur.start + row * h + col] += dpr * h_prev[col];
                        new_dh_carry[col] += v[ur.start + row * h + col] * dpr;
                    }
                    grads[br.start + row] += dpr;
                }
            }
            dh_carry = new_dh_carry;
        }

        if layer > 0 {
            // dx of this layer is the external dh of the layer below.
            ext_dh = dx_all;
        }
    }

    Ok(grads)
}
