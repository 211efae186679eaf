//! Contrastive anomaly detection for unlabeled energy-consumption time series.
//!
//! An LSTM encoder is trained with a margin contrastive loss on temporally
//! paired windows of one feature; anomalies are windows (or window pairs)
//! whose embeddings lie far apart. K-means distance-to-centroid and rolling
//! skewness baselines, a synthetic data generator and a multi-seed benchmark
//! harness are included for comparison.

#![allow(clippy::needless_range_loop)]

pub mod baselines;
pub mod bench;
pub mod contrastive;
mod error;
pub mod nn;
pub mod timeseries;

pub use error::{Error, ErrorKind, Result};
