//! Pair construction, the margin contrastive objective, encoder training
//! and the two anomaly-scoring procedures (pairwise and min-distance).

mod detect;
mod loss;
mod model;
mod pairs;

pub use detect::{
    anomaly_score_min, detect_anomalies, min_distance, score_against_reference, DetectionResult,
    DetectionUnit, PairScope, DEFAULT_THRESHOLD,
};
pub use loss::{loss_from_distance, pair_loss, pair_loss_grad};
pub use model::{
    config_hash, embed, embed_with, initial_params, loss_and_gradient, mean_pair_loss, total_loss,
    train, EncoderModel, TrainConfig, CHECKPOINT_FORMAT, CHECKPOINT_VERSION,
};
pub use pairs::{create_pairs, PairPolicy, PairSet};
