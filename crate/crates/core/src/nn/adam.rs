use serde::{Deserialize, Serialize};

use super::params::Parameters;
use crate::error::{Error, Result};

/// Adam moments and step counter for one parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new<P: Parameters>(params: &P) -> Self {
        Self::with_hyper(params, 0.9, 0.999, 1e-8)
    }

    pub fn with_hyper<P: Parameters>(params: &P, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        let zeros: Vec<Vec<f64>> = params
            .arrays()
            .iter()
            .map(|(_, a)| vec![0.0; a.len()])
            .collect();
        Self {
            beta1,
            beta2,
            epsilon,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    pub fn first_moments(&self) -> &[Vec<f64>] {
        &self.first
    }

    pub fn second_moments(&self) -> &[Vec<f64>] {
        &self.second
    }
}

/// One bias-corrected Adam update of `params` in place.
///
/// The state and parameters are left untouched when an error is returned.
pub fn adam_step<P: Parameters>(
    state: &mut AdamState,
    params: &mut P,
    grads: &P,
    lr: f64,
) -> Result<()> {
    if !(lr >= 0.0 && lr.is_finite()) {
        return Err(Error::Config(format!(
            "learning rate must be finite and >= 0, got {lr}"
        )));
    }
    if !(0.0 < state.beta1
        && state.beta1 < 1.0
        && 0.0 < state.beta2
        && state.beta2 < 1.0
        && state.epsilon > 0.0)
    {
        return Err(Error::Config("adam hyper-parameters out of range".into()));
    }
    if !params.shapes_match(grads) || state.first.len() != grads.arrays().len() {
        return Err(Error::ShapeMismatch(
            "adam parameters, gradients and state differ".into(),
        ));
    }
    for (name, g) in grads.arrays() {
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteGradient(name.to_string()));
        }
    }

    state.step += 1;
    let t = state.step as i32;
    let (b1, b2, eps) = (state.beta1, state.beta2, state.epsilon);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    for (((_, p), (_, g)), (m, v)) in params
        .arrays_mut()
        .into_iter()
        .zip(grads.arrays())
        .zip(state.first.iter_mut().zip(state.second.iter_mut()))
    {
        for k in 0..p.len() {
            m[k] = b1 * m[k] + (1.0 - b1) * g[k];
            v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
            let m_hat = m[k] / c1;
            let v_hat = v[k] / c2;
            p[k] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}
