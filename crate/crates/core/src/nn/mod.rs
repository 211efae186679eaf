//! Dense 64-bit kernels for the encoder: matrices, an LSTM layer with exact
//! BPTT gradients, a linear head and the Adam optimizer.

mod adam;
mod encoder;
mod linear;
mod lstm;
mod params;
mod tensor;

pub use adam::{adam_step, AdamState};
pub use encoder::EncoderParams;
pub use linear::{linear_backward_acc, linear_forward, LinearParams};
pub use lstm::{lstm_backward, lstm_backward_acc, lstm_forward, LstmParams, LstmTrace};
pub use params::{GradientBundle, Parameters};
pub use tensor::{dot, euclidean_distance, squared_distance, Matrix, Vector};
