//! Synthetic labeled data, detection metrics, multi-seed method comparison
//! and report export.

mod compare;
mod export;
mod metrics;
mod svg;
mod synthetic;

pub use compare::{
    compare_methods, instance_truth, BenchConfig, BenchData, Cell, CountUnit, Counts, LossHistory,
    Method, RunOutcome, RunReport, Summary,
};
pub use export::{
    config_json, counts_csv, export_report, format_cell, losses_csv, metrics_csv, sanitize,
    table1_csv,
};
pub use metrics::{evaluate, Metrics};
pub use svg::line_plot;
pub use synthetic::{
    generate_synthetic, Injection, InjectionShape, Sinusoid, SyntheticFeature, SyntheticSpec,
};
