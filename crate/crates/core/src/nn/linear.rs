use rand::Rng;
use serde::{Deserialize, Serialize};

use super::params::{fill_uniform, Parameters};
use super::tensor::{all_finite, Matrix, Vector};
use crate::error::{Error, Result};

/// Affine projection `y = W h + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub weight: Matrix,
    pub bias: Vector,
}

impl LinearParams {
    pub fn zeros(input: usize, output: usize) -> Self {
        Self {
            weight: Matrix::zeros(output, input),
            bias: vec![0.0; output],
        }
    }

    /// Uniform(−bound, bound) on weight and bias.
    pub fn init<R: Rng>(input: usize, output: usize, bound: f64, rng: &mut R) -> Self {
        let mut p = Self::zeros(input, output);
        for (_, a) in p.arrays_mut() {
            fill_uniform(a, bound, rng);
        }
        p
    }

    pub fn input_size(&self) -> usize {
        self.weight.cols()
    }

    pub fn output_size(&self) -> usize {
        self.weight.rows()
    }

    pub fn validate(&self) -> Result<()> {
        if self.bias.len() != self.weight.rows() {
            return Err(Error::ShapeMismatch(format!(
                "bias of length {} for {} outputs",
                self.bias.len(),
                self.weight.rows()
            )));
        }
        if !self.is_finite() {
            return Err(Error::NonFinite("linear parameters".into()));
        }
        Ok(())
    }
}

impl Parameters for LinearParams {
    fn arrays(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("proj.weight", self.weight.as_slice()),
            ("proj.bias", &self.bias),
        ]
    }

    fn arrays_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("proj.weight", self.weight.as_mut_slice()),
            ("proj.bias", &mut self.bias),
        ]
    }
}

pub fn linear_forward(p: &LinearParams, h: &[f64]) -> Result<Vector> {
    let mut y = p.bias.clone();
    if h.len() != p.input_size() {
        return Err(Error::ShapeMismatch(format!(
            "input of length {} for projection expecting {}",
            h.len(),
            p.input_size()
        )));
    }
    p.weight.matvec_acc(h, &mut y);
    if !all_finite(&y) {
        return Err(Error::NonFinite("projection output".into()));
    }
    Ok(y)
}

/// Adds `dL/dW`, `dL/db` into `grads` and returns `dL/dh`.
pub fn linear_backward_acc(
    p: &LinearParams,
    h: &[f64],
    dy: &[f64],
    grads: &mut LinearParams,
) -> Result<Vector> {
    if dy.len() != p.output_size() || h.len() != p.input_size() {
        return Err(Error::ShapeMismatch("projection backward".into()));
    }
    grads.weight.outer_acc(dy, h);
    for (b, d) in grads.bias.iter_mut().zip(dy) {
        *b += d;
    }
    let mut dh = vec![0.0; p.input_size()];
    p.weight.matvec_t_acc(dy, &mut dh);
    Ok(dh)
}
