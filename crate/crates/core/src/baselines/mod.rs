//! Comparison methods: k-means distance-to-centroid and rolling skewness.

mod kmeans;
mod skewness;

pub use kmeans::{
    centroid_distances, kmeans_anomalies, kmeans_detect, kmeans_fit, kmeans_fit_best, quantile,
    KMeansConfig, KMeansModel,
};
pub use skewness::{
    rolling_skewness, skewness, skewness_anomalies, SkewnessConfig, SkewnessReport,
};
