use rand::Rng;
use serde::{Deserialize, Serialize};

use super::linear::{linear_backward_acc, linear_forward, LinearParams};
use super::lstm::{lstm_backward_acc, lstm_forward, LstmParams, LstmTrace};
use super::params::Parameters;
use super::tensor::Vector;
use crate::error::Result;

/// Sequence encoder: LSTM final hidden state followed by a linear projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderParams {
    pub lstm: LstmParams,
    pub projection: LinearParams,
}

impl EncoderParams {
    /// Every array uniform(−1/√H, 1/√H); LSTM forget bias 1.
    pub fn init<R: Rng>(
        input_size: usize,
        hidden_size: usize,
        embedding_size: usize,
        rng: &mut R,
    ) -> Self {
        let lstm = LstmParams::init(input_size, hidden_size, rng);
        let bound = 1.0 / (hidden_size as f64).sqrt();
        let projection = LinearParams::init(hidden_size, embedding_size, bound, rng);
        Self { lstm, projection }
    }

    pub fn zeros(input_size: usize, hidden_size: usize, embedding_size: usize) -> Self {
        Self {
            lstm: LstmParams::zeros(input_size, hidden_size),
            projection: LinearParams::zeros(hidden_size, embedding_size),
        }
    }

    pub fn embedding_size(&self) -> usize {
        self.projection.output_size()
    }

    pub fn validate(&self) -> Result<()> {
        self.lstm.validate()?;
        self.projection.validate()?;
        if self.projection.input_size() != self.lstm.hidden_size() {
            return Err(crate::Error::ShapeMismatch(
                "projection input differs from lstm hidden size".into(),
            ));
        }
        Ok(())
    }

    pub fn forward(&self, x: &[f64]) -> Result<(Vector, LstmTrace)> {
        let trace = lstm_forward(&self.lstm, x)?;
        let y = linear_forward(&self.projection, trace.final_hidden())?;
        Ok((y, trace))
    }

    pub fn encode(&self, x: &[f64]) -> Result<Vector> {
        self.forward(x).map(|(y, _)| y)
    }

    /// Accumulates parameter gradients for upstream `dL/dy`; returns `dL/dx`.
    pub fn backward_acc(
        &self,
        trace: &LstmTrace,
        d_embedding: &[f64],
        grads: &mut Self,
    ) -> Result<Vec<f64>> {
        let dh = linear_backward_acc(
            &self.projection,
            trace.final_hidden(),
            d_embedding,
            &mut grads.projection,
        )?;
        lstm_backward_acc(&self.lstm, trace, &dh, &mut grads.lstm)
    }
}

impl Parameters for EncoderParams {
    fn arrays(&self) -> Vec<(&'static str, &[f64])> {
        let mut v = self.lstm.arrays();
        v.extend(self.projection.arrays());
        v
    }

    fn arrays_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        let mut v = self.lstm.arrays_mut();
        v.extend(self.projection.arrays_mut());
        v
    }
}
