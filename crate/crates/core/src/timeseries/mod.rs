//! Ingestion, validation, normalization, feature ranking and windowing.

mod correlation;
mod ingest;
mod matrix;
mod normalize;
mod window;

pub use correlation::{pearson_correlation, select_features, FeatureRanking};
pub use ingest::{format_timestamp, load_csv, read_csv, write_csv, IngestConfig};
pub use matrix::FeatureMatrix;
pub use normalize::{
    column_stats, denormalize, normalize_slice, zscore_normalize, NormalizationParams, STD_FLOOR,
};
pub use window::{make_windows, window_count, windows_from_slice, Window};
