use std::fmt;

use serde::{Deserialize, Serialize};

use super::metrics::{evaluate, Metrics};
use super::synthetic::{generate_synthetic, SyntheticSpec};
use crate::baselines::{kmeans_detect, skewness_anomalies, KMeansConfig, SkewnessConfig};
use crate::contrastive::{
    detect_anomalies, train, DetectionResult, PairPolicy, PairScope, TrainConfig, DEFAULT_THRESHOLD,
};
use crate::error::{Error, Result};
use crate::timeseries::{FeatureMatrix, Window};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Contrastive,
    Kmeans,
    Skewness,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Contrastive, Method::Kmeans, Method::Skewness];

    pub fn display_name(self) -> &'static str {
        match self {
            Method::Contrastive => "Contrastive Learning with LSTM",
            Method::Kmeans => "K-Means",
            Method::Skewness => "Skewness",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "contrastive" => Ok(Method::Contrastive),
            "kmeans" => Ok(Method::Kmeans),
            "skewness" => Ok(Method::Skewness),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Contrastive => "contrastive",
            Method::Kmeans => "kmeans",
            Method::Skewness => "skewness",
        })
    }
}

/// Settings shared by every run of a comparison. Per-run seeds override
/// `train.seed`, `policy.seed` and the k-means seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub train: TrainConfig,
    pub policy: PairPolicy,
    pub threshold: f64,
    pub pair_scope: PairScope,
    pub kmeans: KMeansConfig,
    pub skewness: SkewnessConfig,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            policy: PairPolicy::default(),
            threshold: DEFAULT_THRESHOLD,
            pair_scope: PairScope::Similar,
            kmeans: KMeansConfig::default(),
            skewness: SkewnessConfig::default(),
        }
    }
}

/// Data under test with optional per-row ground truth. Metrics are computed
/// per window against [`instance_truth`].
#[derive(Debug, Clone, PartialEq)]
pub struct BenchData {
    pub matrix: FeatureMatrix,
    pub truth: Option<Vec<bool>>,
    /// Free-form provenance recorded in the report.
    pub source: String,
}

impl BenchData {
    pub fn from_spec(spec: &SyntheticSpec) -> Result<Self> {
        let (matrix, truth) = generate_synthetic(spec)?;
        Ok(Self {
            matrix,
            truth: Some(truth),
            source: "synthetic".into(),
        })
    }
}

/// Flag counts of one run at each counting unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    /// Flagged window pairs (contrastive only).
    pub pairs: Option<usize>,
    /// Flagged windows.
    pub instances: usize,
    /// Flagged time points.
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub seed: u64,
    pub counts: Option<Counts>,
    pub metrics: Option<Metrics>,
    pub error: Option<String>,
    /// Per-row flags, kept for downstream analysis; not exported.
    #[serde(skip)]
    pub row_flags: Vec<bool>,
    /// Per-window flags, aligned with the method's windows; not exported.
    #[serde(skip)]
    pub instance_flags: Vec<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Population standard deviation over successful seeds.
    pub std: f64,
    pub ok: usize,
    pub failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub feature: String,
    pub method: Method,
    pub runs: Vec<RunOutcome>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CountUnit {
    Pair,
    Instance,
    Row,
}

impl CountUnit {
    pub fn name(self) -> &'static str {
        match self {
            CountUnit::Pair => "pair",
            CountUnit::Instance => "instance",
            CountUnit::Row => "row",
        }
    }
}

impl Cell {
    pub fn summary(&self, unit: CountUnit) -> Option<Summary> {
        let mut values: Vec<f64> = self
            .runs
            .iter()
            .filter_map(|r| r.counts)
            .filter_map(|c| match unit {
                CountUnit::Pair => c.pairs,
                CountUnit::Instance => Some(c.instances),
                CountUnit::Row => Some(c.rows),
            })
            .map(|v| v as f64)
            .collect();
        let failed = self.runs.iter().filter(|r| r.error.is_some()).count();
        if values.is_empty() {
            return (failed > 0).then_some(Summary {
                mean: 0.0,
                std: 0.0,
                ok: 0,
                failed,
            });
        }
        values.sort_by(f64::total_cmp);
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Summary {
            mean,
            std: var.sqrt(),
            ok: values.len(),
            failed,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossHistory {
    pub feature: String,
    pub seed: u64,
    pub losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub source: String,
    pub rows: usize,
    pub features: Vec<String>,
    pub methods: Vec<Method>,
    pub seeds: Vec<u64>,
    pub config: BenchConfig,
    pub has_truth: bool,
    pub cells: Vec<Cell>,
    pub losses: Vec<LossHistory>,
}

impl RunReport {
    pub fn cell(&self, feature: &str, method: Method) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.feature == feature && c.method == method)
    }

    pub fn losses_for(&self, feature: &str) -> Vec<&LossHistory> {
        self.losses
            .iter()
            .filter(|l| l.feature == feature)
            .collect()
    }
}

struct Run {
    counts: Counts,
    rows: DetectionResult,
    instance_flags: Vec<bool>,
    spans: Vec<(usize, usize)>,
    losses: Option<Vec<f64>>,
}

/// A window is a true anomaly when any row it covers is.
pub fn instance_truth(spans: &[(usize, usize)], row_truth: &[bool]) -> Result<Vec<bool>> {
    spans
        .iter()
        .map(|&(start, len)| {
            row_truth
                .get(start..start + len)
                .map(|rows| rows.iter().any(|&t| t))
                .ok_or(Error::LengthMismatch {
                    left: start + len,
                    right: row_truth.len(),
                })
        })
        .collect()
}

fn spans(windows: &[Window]) -> Vec<(usize, usize)> {
    windows.iter().map(|w| (w.start_index, w.len())).collect()
}

fn run_contrastive(
    data: &BenchData,
    feature: &str,
    config: &BenchConfig,
    seed: u64,
) -> Result<Run> {
    let train_cfg = TrainConfig {
        seed,
        ..config.train.clone()
    };
    let policy = PairPolicy {
        seed,
        ..config.policy.clone()
    };
    let (model, losses) = train(&data.matrix, feature, &train_cfg, &policy)?;
    let pairs = detect_anomalies(
        feature,
        &model,
        &data.matrix,
        config.threshold,
        &policy,
        config.pair_scope,
    )?;
    let windows = model.windows_for(&data.matrix)?;
    let instances = pairs.to_instances(windows.len())?;
    let rows = instances.instances_to_rows(&windows, data.matrix.row_count())?;
    Ok(Run {
        counts: Counts {
            pairs: Some(pairs.flagged_count()),
            instances: instances.flagged_count(),
            rows: rows.flagged_count(),
        },
        rows,
        instance_flags: instances.flags,
        spans: spans(&windows),
        losses: Some(losses),
    })
}

fn run_kmeans(data: &BenchData, feature: &str, config: &BenchConfig, seed: u64) -> Result<Run> {
    let (windows, instances) = kmeans_detect(&data.matrix, feature, &config.kmeans, seed)?;
    let rows = instances.instances_to_rows(&windows, data.matrix.row_count())?;
    Ok(Run {
        counts: Counts {
            pairs: None,
            instances: instances.flagged_count(),
            rows: rows.flagged_count(),
        },
        rows,
        instance_flags: instances.flags,
        spans: spans(&windows),
        losses: None,
    })
}

fn run_skewness(data: &BenchData, feature: &str, config: &BenchConfig) -> Result<Run> {
    let report = skewness_anomalies(
        &data.matrix,
        feature,
        config.skewness.window,
        config.skewness.cutoff,
    )?;
    let rows = report.row_result()?;
    let window = report.window;
    Ok(Run {
        counts: Counts {
            pairs: None,
            instances: report.window_flags.iter().filter(|&&f| f).count(),
            rows: rows.flagged_count(),
        },
        rows,
        spans: (0..report.window_flags.len())
            .map(|s| (s, window))
            .collect(),
        instance_flags: report.window_flags,
        losses: None,
    })
}

/// Runs every method on every feature for every seed and collects flag
/// counts, metrics (when ground truth exists) and contrastive loss curves.
///
/// Failed runs are recorded in their cell rather than aborting the report.
pub fn compare_methods(
    data: &BenchData,
    features: &[String],
    methods: &[Method],
    seeds: &[u64],
    config: &BenchConfig,
) -> Result<RunReport> {
    if seeds.is_empty() {
        return Err(Error::Config("at least one seed is required".into()));
    }
    if let Some(truth) = &data.truth {
        if truth.len() != data.matrix.row_count() {
            return Err(Error::LengthMismatch {
                left: truth.len(),
                right: data.matrix.row_count(),
            });
        }
    }
    for f in features {
        if data.matrix.feature_index(f).is_none() {
            return Err(Error::UnknownFeature(f.clone()));
        }
    }
    let mut methods = methods.to_vec();
    methods.sort();
    methods.dedup();

    let mut cells = Vec::new();
    let mut losses = Vec::new();
    for feature in features {
        for &method in &methods {
            let mut runs = Vec::with_capacity(seeds.len());
            for &seed in seeds {
                let result = match method {
                    Method::Contrastive => run_contrastive(data, feature, config, seed),
                    Method::Kmeans => run_kmeans(data, feature, config, seed),
                    Method::Skewness => run_skewness(data, feature, config),
                };
                let outcome = match result {
                    Ok(run) => {
                        let metrics = match &data.truth {
                            Some(t) => Some(evaluate(
                                &run.instance_flags,
                                &instance_truth(&run.spans, t)?,
                            )?),
                            None => None,
                        };
                        if let Some(l) = run.losses {
                            losses.push(LossHistory {
                                feature: feature.clone(),
                                seed,
                                losses: l,
                            });
                        }
                        RunOutcome {
                            seed,
                            counts: Some(run.counts),
                            metrics,
                            error: None,
                            row_flags: run.rows.flags,
                            instance_flags: run.instance_flags,
                        }
                    }
                    Err(e) => RunOutcome {
                        seed,
                        counts: None,
                        metrics: None,
                        error: Some(e.to_string()),
                        row_flags: Vec::new(),
                        instance_flags: Vec::new(),
                    },
                };
                runs.push(outcome);
            }
            cells.push(Cell {
                feature: feature.clone(),
                method,
                runs,
            });
        }
    }
    Ok(RunReport {
        source: data.source.clone(),
        rows: data.matrix.row_count(),
        features: features.to_vec(),
        methods,
        seeds: seeds.to_vec(),
        config: config.clone(),
        has_truth: data.truth.is_some(),
        cells,
        losses,
    })
}
