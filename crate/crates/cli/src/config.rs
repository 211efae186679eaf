//! Flat run configuration: built-in defaults, then an optional JSON file,
//! then command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use ecl_core::baselines::{KMeansConfig, SkewnessConfig};
use ecl_core::bench::BenchConfig;
use ecl_core::contrastive::{PairPolicy, PairScope, TrainConfig, DEFAULT_THRESHOLD};
use ecl_core::timeseries::IngestConfig;
use ecl_core::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CliConfig {
    pub input: Option<PathBuf>,
    pub timestamp_column: Option<String>,
    pub forward_fill: bool,
    pub out: PathBuf,

    pub feature: Option<String>,
    pub features: Vec<String>,
    pub target: Option<String>,
    pub k: usize,

    pub learning_rate: f64,
    pub margin: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub window: usize,
    pub stride: usize,
    pub embedding_size: usize,
    pub hidden_size: usize,

    pub positive_max_lag: usize,
    pub negative_min_gap: usize,
    pub negatives_per_positive: usize,
    pub allow_no_negatives: bool,

    pub model: Option<PathBuf>,
    pub reference: Option<PathBuf>,
    pub threshold: f64,
    pub pairs: PairScope,

    pub method: Option<String>,
    pub kmeans_k: usize,
    pub kmeans_max_iter: usize,
    pub kmeans_restarts: usize,
    pub flag_quantile: f64,
    pub baseline_window: usize,
    pub skewness_cutoff: f64,

    pub spec: Option<PathBuf>,
    pub seeds: Vec<u64>,
    pub methods: Vec<String>,
}

impl Default for CliConfig {
    fn default() -> Self {
        let train = TrainConfig::default();
        let policy = PairPolicy::default();
        let km = KMeansConfig::default();
        let sk = SkewnessConfig::default();
        Self {
            input: None,
            timestamp_column: None,
            forward_fill: false,
            out: PathBuf::from("out"),
            feature: None,
            features: Vec::new(),
            target: None,
            k: 5,
            learning_rate: train.learning_rate,
            margin: train.margin,
            epochs: train.epochs,
            batch_size: train.batch_size,
            seed: train.seed,
            window: train.window,
            stride: train.stride,
            embedding_size: train.embedding_size,
            hidden_size: train.hidden_size,
            positive_max_lag: policy.positive_max_lag,
            negative_min_gap: policy.negative_min_gap,
            negatives_per_positive: policy.negatives_per_positive,
            allow_no_negatives: policy.allow_no_negatives,
            model: None,
            reference: None,
            threshold: DEFAULT_THRESHOLD,
            pairs: PairScope::Similar,
            method: None,
            kmeans_k: km.k,
            kmeans_max_iter: km.max_iter,
            kmeans_restarts: km.restarts,
            flag_quantile: km.flag_quantile,
            baseline_window: sk.window,
            skewness_cutoff: sk.cutoff,
            spec: None,
            seeds: vec![0, 1, 2, 3, 4],
            methods: vec!["contrastive".into(), "kmeans".into(), "skewness".into()],
        }
    }
}

/// Default value of every field, rendered for `--help`.
pub fn default_strings() -> Map<String, Value> {
    match serde_json::to_value(CliConfig::default()) {
        Ok(Value::Object(map)) => map,
        _ => unreachable!("CliConfig serializes to an object"),
    }
}

pub fn render_default(v: &Value) -> String {
    match v {
        Value::Null => "none".into(),
        Value::String(s) => s.clone(),
        Value::Array(items) => items
            .iter()
            .map(render_default)
            .collect::<Vec<_>>()
            .join(","),
        other => other.to_string(),
    }
}

fn overlay(base: &mut Map<String, Value>, top: Map<String, Value>) {
    for (k, v) in top {
        base.insert(k, v);
    }
}

/// Defaults, overlaid with `file` (if any), overlaid with `flags`.
pub fn resolve(file: Option<&Path>, flags: Map<String, Value>) -> Result<CliConfig> {
    let mut merged = default_strings();
    if let Some(path) = file {
        let text = fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        match serde_json::from_str::<Value>(&text) {
            Ok(Value::Object(map)) => {
                // validate the file on its own so errors name the file
                serde_json::from_value::<CliConfig>(Value::Object(map.clone()))
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                overlay(&mut merged, map);
            }
            Ok(_) => {
                return Err(Error::Config(format!(
                    "{}: expected a JSON object",
                    path.display()
                )))
            }
            Err(e) => return Err(Error::Config(format!("{}: {e}", path.display()))),
        }
    }
    overlay(&mut merged, flags);
    serde_json::from_value(Value::Object(merged)).map_err(|e| Error::Config(e.to_string()))
}

impl CliConfig {
    pub fn ingest(&self) -> IngestConfig {
        IngestConfig {
            timestamp_column: self.timestamp_column.clone(),
            columns: None,
            forward_fill: self.forward_fill,
        }
    }

    pub fn train(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.learning_rate,
            margin: self.margin,
            epochs: self.epochs,
            batch_size: self.batch_size,
            seed: self.seed,
            window: self.window,
            stride: self.stride,
            embedding_size: self.embedding_size,
            hidden_size: self.hidden_size,
        }
    }

    pub fn policy(&self) -> PairPolicy {
        PairPolicy {
            positive_max_lag: self.positive_max_lag,
            negative_min_gap: self.negative_min_gap,
            negatives_per_positive: self.negatives_per_positive,
            seed: self.seed,
            allow_no_negatives: self.allow_no_negatives,
        }
    }

    pub fn kmeans(&self) -> KMeansConfig {
        KMeansConfig {
            k: self.kmeans_k,
            max_iter: self.kmeans_max_iter,
            flag_quantile: self.flag_quantile,
            window: self.baseline_window,
            restarts: self.kmeans_restarts,
        }
    }

    pub fn skewness(&self) -> SkewnessConfig {
        SkewnessConfig {
            window: self.baseline_window,
            cutoff: self.skewness_cutoff,
        }
    }

    pub fn bench(&self) -> BenchConfig {
        BenchConfig {
            train: self.train(),
            policy: self.policy(),
            threshold: self.threshold,
            pair_scope: self.pairs,
            kmeans: self.kmeans(),
            skewness: self.skewness(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn obj(v: Value) -> Map<String, Value> {
        match v {
            Value::Object(m) => m,
            _ => panic!("not an object"),
        }
    }

    #[test]
    fn flags_beat_file_beat_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"epochs": 7, "margin": 2.0}"#).unwrap();
        let cfg = resolve(Some(&path), obj(json!({"epochs": 3}))).unwrap();
        assert_eq!(cfg.epochs, 3);
        assert_eq!(cfg.margin, 2.0);
        assert_eq!(cfg.hidden_size, CliConfig::default().hidden_size);
    }

    #[test]
    fn unknown_key_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        fs::write(&path, r#"{"epoch": 7}"#).unwrap();
        assert!(matches!(
            resolve(Some(&path), Map::new()),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn missing_file_is_io() {
        let err = resolve(Some(Path::new("/nonexistent/c.json")), Map::new()).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn defaults_round_trip() {
        let d = CliConfig::default();
        assert_eq!(resolve(None, Map::new()).unwrap(), d);
        assert_eq!(d.train(), TrainConfig::default());
        assert_eq!(render_default(&json!([0, 1])), "0,1");
        assert_eq!(render_default(&Value::Null), "none");
    }
}
