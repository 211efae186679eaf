//! Single-layer LSTM with hand-derived backpropagation through time.
//!
//! ```text
//! z_t = [x_t ; h_{t-1}]
//! i_t = σ(W_i z_t + b_i)    f_t = σ(W_f z_t + b_f)
//! g_t = tanh(W_g z_t + b_g) o_t = σ(W_o z_t + b_o)
//! c_t = f_t ⊙ c_{t-1} + i_t ⊙ g_t
//! h_t = o_t ⊙ tanh(c_t)
//! ```
//! with `h_0 = c_0 = 0`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::{fill_uniform, GradientBundle, Parameters};
use super::tensor::{all_finite, sigmoid, Matrix, Vector};
use crate::error::{Error, Result};

const I: usize = 0;
const F: usize = 1;
const G: usize = 2;
const O: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LstmParams {
    input_size: usize,
    hidden_size: usize,
    /// Gate weights in i, f, g, o order; each `H × (d_in + H)`.
    pub weights: [Matrix; 4],
    /// Gate biases in i, f, g, o order; each of length `H`.
    pub biases: [Vector; 4],
}

impl LstmParams {
    pub fn zeros(input_size: usize, hidden_size: usize) -> Self {
        let z = input_size + hidden_size;
        Self {
            input_size,
            hidden_size,
            weights: std::array::from_fn(|_| Matrix::zeros(hidden_size, z)),
            biases: std::array::from_fn(|_| vec![0.0; hidden_size]),
        }
    }

    /// Uniform(−1/√H, 1/√H) everywhere, then the forget-gate bias set to 1.
    pub fn init<R: Rng>(input_size: usize, hidden_size: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(input_size, hidden_size);
        let bound = 1.0 / (hidden_size as f64).sqrt();
        for (_, a) in p.arrays_mut() {
            fill_uniform(a, bound, rng);
        }
        p.biases[F].fill(1.0);
        p
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden_size
    }

    /// Checks that every array agrees with `(input_size, hidden_size)`.
    pub fn validate(&self) -> Result<()> {
        let z = self.input_size + self.hidden_size;
        let ok = self.hidden_size > 0
            && self.input_size > 0
            && self
                .weights
                .iter()
                .all(|w| w.shape() == (self.hidden_size, z))
            && self.biases.iter().all(|b| b.len() == self.hidden_size);
        if !ok {
            return Err(Error::ShapeMismatch(format!(
                "lstm parameters inconsistent with d_in={}, H={}",
                self.input_size, self.hidden_size
            )));
        }
        if !self.is_finite() {
            return Err(Error::NonFinite("lstm parameters".into()));
        }
        Ok(())
    }
}

impl Parameters for LstmParams {
    fn arrays(&self) -> Vec<(&'static str, &[f64])> {
        let [wi, wf, wg, wo] = &self.weights;
        let [bi, bf, bg, bo] = &self.biases;
        vec![
            ("lstm.w_i", wi.as_slice()),
            ("lstm.w_f", wf.as_slice()),
            ("lstm.w_g", wg.as_slice()),
            ("lstm.w_o", wo.as_slice()),
            ("lstm.b_i", bi.as_slice()),
            ("lstm.b_f", bf.as_slice()),
            ("lstm.b_g", bg.as_slice()),
            ("lstm.b_o", bo.as_slice()),
        ]
    }

    fn arrays_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        let [wi, wf, wg, wo] = &mut self.weights;
        let [bi, bf, bg, bo] = &mut self.biases;
        vec![
            ("lstm.w_i", wi.as_mut_slice()),
            ("lstm.w_f", wf.as_mut_slice()),
            ("lstm.w_g", wg.as_mut_slice()),
            ("lstm.w_o", wo.as_mut_slice()),
            ("lstm.b_i", bi.as_mut_slice()),
            ("lstm.b_f", bf.as_mut_slice()),
            ("lstm.b_g", bg.as_mut_slice()),
            ("lstm.b_o", bo.as_mut_slice()),
        ]
    }
}

/// Everything the forward pass computed, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct LstmTrace {
    input_size: usize,
    hidden_size: usize,
    steps: usize,
    /// `T × (d_in + H)` concatenated inputs.
    z: Vec<f64>,
    /// Post-activation gates, each `T × H`.
    gates: [Vec<f64>; 4],
    /// `(T + 1) × H`, row 0 is `c_0`.
    cells: Vec<f64>,
    /// `T × H`
    tanh_cells: Vec<f64>,
    /// `(T + 1) × H`, row 0 is `h_0`.
    hidden: Vec<f64>,
}

impl LstmTrace {
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// `h_t` for `t` in `1..=T`.
    pub fn hidden(&self, t: usize) -> &[f64] {
        let h = self.hidden_size;
        &self.hidden[t * h..(t + 1) * h]
    }

    /// `c_t` for `t` in `1..=T`.
    pub fn cell(&self, t: usize) -> &[f64] {
        let h = self.hidden_size;
        &self.cells[t * h..(t + 1) * h]
    }

    pub fn final_hidden(&self) -> &[f64] {
        self.hidden(self.steps)
    }

    pub fn hidden_states(&self) -> Vec<Vector> {
        (1..=self.steps).map(|t| self.hidden(t).to_vec()).collect()
    }

    pub fn cell_states(&self) -> Vec<Vector> {
        (1..=self.steps).map(|t| self.cell(t).to_vec()).collect()
    }
}

/// Runs the recurrence over `x`, a flattened `T × d_in` sequence.
pub fn lstm_forward(p: &LstmParams, x: &[f64]) -> Result<LstmTrace> {
    let (d, h) = (p.input_size, p.hidden_size);
    if d == 0 || x.is_empty() || !x.len().is_multiple_of(d) {
        return Err(Error::ShapeMismatch(format!(
            "input of length {} is not a non-empty multiple of d_in={d}",
            x.len()
        )));
    }
    if !all_finite(x) {
        return Err(Error::NonFinite("lstm input".into()));
    }
    let steps = x.len() / d;
    let zw = d + h;
    let mut trace = LstmTrace {
        input_size: d,
        hidden_size: h,
        steps,
        z: vec![0.0; steps * zw],
        gates: std::array::from_fn(|_| vec![0.0; steps * h]),
        cells: vec![0.0; (steps + 1) * h],
        tanh_cells: vec![0.0; steps * h],
        hidden: vec![0.0; (steps + 1) * h],
    };
    let mut pre = vec![0.0; h];
    for t in 0..steps {
        let z = &mut trace.z[t * zw..(t + 1) * zw];
        z[..d].copy_from_slice(&x[t * d..(t + 1) * d]);
        z[d..].copy_from_slice(&trace.hidden[t * h..(t + 1) * h]);
        for k in 0..4 {
            pre.copy_from_slice(&p.biases[k]);
            p.weights[k].matvec_acc(&trace.z[t * zw..(t + 1) * zw], &mut pre);
            let out = &mut trace.gates[k][t * h..(t + 1) * h];
            if k == G {
                for (o, a) in out.iter_mut().zip(&pre) {
                    *o = a.tanh();
                }
            } else {
                for (o, a) in out.iter_mut().zip(&pre) {
                    *o = sigmoid(*a);
                }
            }
        }
        for j in 0..h {
            let idx = t * h + j;
            let c =
                trace.gates[F][idx] * trace.cells[idx] + trace.gates[I][idx] * trace.gates[G][idx];
            let tc = c.tanh();
            trace.cells[idx + h] = c;
            trace.tanh_cells[idx] = tc;
            trace.hidden[idx + h] = trace.gates[O][idx] * tc;
        }
    }
    if !all_finite(&trace.hidden) || !all_finite(&trace.cells) {
        return Err(Error::NonFinite("lstm states".into()));
    }
    Ok(trace)
}

/// Gradients of a scalar loss given `dL/dh_T`.
pub fn lstm_backward(
    p: &LstmParams,
    trace: &LstmTrace,
    d_final: &[f64],
) -> Result<GradientBundle<LstmParams>> {
    let mut grads = p.zeros_like();
    let input = lstm_backward_acc(p, trace, d_final, &mut grads)?;
    Ok(GradientBundle {
        params: grads,
        input,
    })
}

/// Like [`lstm_backward`] but adds parameter gradients into `grads`.
/// Returns `dL/dx`.
pub fn lstm_backward_acc(
    p: &LstmParams,
    trace: &LstmTrace,
    d_final: &[f64],
    grads: &mut LstmParams,
) -> Result<Vec<f64>> {
    let (d, h) = (p.input_size, p.hidden_size);
    if trace.input_size != d || trace.hidden_size != h {
        return Err(Error::StaleCache(format!(
            "trace for d_in={}, H={} used with d_in={d}, H={h}",
            trace.input_size, trace.hidden_size
        )));
    }
    if grads.input_size != d || grads.hidden_size != h {
        return Err(Error::ShapeMismatch("gradient accumulator layout".into()));
    }
    if d_final.len() != h {
        return Err(Error::ShapeMismatch(format!(
            "upstream gradient of length {} for H={h}",
            d_final.len()
        )));
    }
    let zw = d + h;
    let mut dx = vec![0.0; trace.steps * d];
    let mut dh = d_final.to_vec();
    let mut dc = vec![0.0; h];
    let mut da: [Vec<f64>; 4] = std::array::from_fn(|_| vec![0.0; h]);
    let mut dz = vec![0.0; zw];

    for t in (0..trace.steps).rev() {
        for j in 0..h {
            let idx = t * h + j;
            let (i, f, g, o) = (
                trace.gates[I][idx],
                trace.gates[F][idx],
                trace.gates[G][idx],
                trace.gates[O][idx],
            );
            let tc = trace.tanh_cells[idx];
            let c_prev = trace.cells[idx];
            let dcj = dc[j] + dh[j] * o * (1.0 - tc * tc);
            da[O][j] = dh[j] * tc * o * (1.0 - o);
            da[I][j] = dcj * g * i * (1.0 - i);
            da[G][j] = dcj * i * (1.0 - g * g);
            da[F][j] = dcj * c_prev * f * (1.0 - f);
            dc[j] = dcj * f;
        }
        let z = &trace.z[t * zw..(t + 1) * zw];
        dz.fill(0.0);
        for k in 0..4 {
            grads.weights[k].outer_acc(&da[k], z);
            for (b, a) in grads.biases[k].iter_mut().zip(&da[k]) {
                *b += a;
            }
            p.weights[k].matvec_t_acc(&da[k], &mut dz);
        }
        dx[t * d..(t + 1) * d].copy_from_slice(&dz[..d]);
        dh.copy_from_slice(&dz[d..]);
    }
    if !all_finite(&dx) || !grads.is_finite() {
        return Err(Error::NonFiniteGradient("lstm".into()));
    }
    Ok(dx)
}
