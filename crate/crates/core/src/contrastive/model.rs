use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::loss::{pair_loss, pair_loss_grad};
use super::pairs::{create_pairs, PairPolicy, PairSet};
use crate::error::{Error, Result};
use crate::nn::{adam_step, AdamState, EncoderParams, Parameters, Vector};
use crate::timeseries::{
    column_stats, normalize_slice, windows_from_slice, FeatureMatrix, NormalizationParams, Window,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub margin: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub window: usize,
    pub stride: usize,
    pub embedding_size: usize,
    pub hidden_size: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            margin: 1.0,
            epochs: 50,
            batch_size: 64,
            seed: 0,
            window: 24,
            stride: 1,
            embedding_size: 16,
            hidden_size: 16,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let problem = if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            "learning_rate must be finite and >= 0"
        } else if !(self.margin > 0.0 && self.margin.is_finite()) {
            "margin must be > 0"
        } else if self.epochs < 1 {
            "epochs must be >= 1"
        } else if self.batch_size < 1 {
            "batch_size must be >= 1"
        } else if self.window < 2 {
            "window must be >= 2"
        } else if self.stride < 1 {
            "stride must be >= 1"
        } else if self.hidden_size < 1 || self.embedding_size < 1 {
            "hidden_size and embedding_size must be >= 1"
        } else {
            return Ok(());
        };
        Err(Error::Config(problem.into()))
    }
}

/// Hex SHA-256 over the canonical JSON of everything that shapes a model.
pub fn config_hash(feature: &str, config: &TrainConfig, policy: &PairPolicy) -> String {
    let canonical = serde_json::to_string(&(feature, config, policy)).expect("config serializes");
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// A trained encoder together with what is needed to apply it to new data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderModel {
    pub feature: String,
    pub config: TrainConfig,
    pub policy: PairPolicy,
    pub config_hash: String,
    pub normalization: NormalizationParams,
    pub params: EncoderParams,
}

pub const CHECKPOINT_FORMAT: &str = "ecl-encoder";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Checkpoint {
    format: String,
    version: u32,
    model: EncoderModel,
}

impl EncoderModel {
    pub fn id(&self) -> &str {
        &self.config_hash
    }

    /// Normalizes the model's feature column with the stored parameters and
    /// cuts it into the configured windows.
    pub fn windows_for(&self, m: &FeatureMatrix) -> Result<Vec<Window>> {
        let (mean, std) = self.normalization.for_feature(&self.feature)?;
        let series = normalize_slice(&m.column(&self.feature)?, mean, std);
        windows_from_slice(
            &self.feature,
            &series,
            self.config.window,
            self.config.stride,
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        self.policy.validate()?;
        self.params.validate()?;
        if self.params.lstm.hidden_size() != self.config.hidden_size
            || self.params.embedding_size() != self.config.embedding_size
            || self.params.lstm.input_size() != 1
        {
            return Err(Error::Checkpoint(
                "parameter shapes disagree with the config".into(),
            ));
        }
        self.normalization.for_feature(&self.feature)?;
        if config_hash(&self.feature, &self.config, &self.policy) != self.config_hash {
            return Err(Error::Checkpoint(
                "config hash does not match the stored config".into(),
            ));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let ck = Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            model: self.clone(),
        };
        let mut s = serde_json::to_string_pretty(&ck).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let ck: Checkpoint =
            serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if ck.format != CHECKPOINT_FORMAT || ck.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint {} v{}",
                ck.format, ck.version
            )));
        }
        ck.model.validate()?;
        Ok(ck.model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// Parameters a training run starts from; the same RNG stream then drives shuffling.
fn init_rng(config: &TrainConfig) -> (EncoderParams, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let params = EncoderParams::init(1, config.hidden_size, config.embedding_size, &mut rng);
    (params, rng)
}

pub fn initial_params(config: &TrainConfig) -> EncoderParams {
    init_rng(config).0
}

pub fn embed(model: &EncoderModel, windows: &[Window]) -> Result<Vec<Vector>> {
    embed_with(&model.params, windows)
}

pub fn embed_with(params: &EncoderParams, windows: &[Window]) -> Result<Vec<Vector>> {
    windows.iter().map(|w| params.encode(&w.values)).collect()
}

fn check_pairs(windows: &[Window], pairs: &PairSet) -> Result<()> {
    let n = windows.len();
    if pairs.i_indices.len() != pairs.len() || pairs.j_indices.len() != pairs.len() {
        return Err(Error::ShapeMismatch(
            "pair index arrays differ in length".into(),
        ));
    }
    if let Some((i, j, _)) = pairs.iter().find(|&(i, j, _)| i >= n || j >= n || i == j) {
        return Err(Error::Config(format!(
            "pair ({i}, {j}) is invalid for {n} windows"
        )));
    }
    Ok(())
}

/// Mean margin loss over `pairs`, evaluated with explicit parameters.
pub fn mean_pair_loss(
    params: &EncoderParams,
    windows: &[Window],
    pairs: &PairSet,
    margin: f64,
) -> Result<f64> {
    check_pairs(windows, pairs)?;
    if pairs.is_empty() {
        return Ok(0.0);
    }
    let emb = embed_with(params, windows)?;
    let mut sum = 0.0;
    for (i, j, y) in pairs.iter() {
        sum += pair_loss(&emb[i], &emb[j], y, margin)?;
    }
    Ok(sum / pairs.len() as f64)
}

/// Contrastive objective over a pair set: mean per-pair loss.
pub fn total_loss(model: &EncoderModel, windows: &[Window], pairs: &PairSet) -> Result<f64> {
    mean_pair_loss(&model.params, windows, pairs, model.config.margin)
}

/// Mean loss over `pairs` and its exact gradient with respect to every parameter.
pub fn loss_and_gradient(
    params: &EncoderParams,
    windows: &[Window],
    pairs: &PairSet,
    margin: f64,
) -> Result<(f64, EncoderParams)> {
    check_pairs(windows, pairs)?;
    let mut grads = params.zeros_like();
    let idx: Vec<usize> = (0..pairs.len()).collect();
    let loss = accumulate_batch(params, windows, pairs, &idx, margin, &mut grads)?;
    Ok((loss, grads))
}

/// Adds the mean-loss gradient of the selected pairs into `grads` and
/// returns the mean loss.
fn accumulate_batch(
    params: &EncoderParams,
    windows: &[Window],
    pairs: &PairSet,
    batch: &[usize],
    margin: f64,
    grads: &mut EncoderParams,
) -> Result<f64> {
    if batch.is_empty() {
        return Ok(0.0);
    }
    let scale = 1.0 / batch.len() as f64;
    let mut sum = 0.0;
    for &k in batch {
        let (i, j, y) = (pairs.i_indices[k], pairs.j_indices[k], pairs.labels[k]);
        let (ei, ti) = params.forward(&windows[i].values)?;
        let (ej, tj) = params.forward(&windows[j].values)?;
        let (loss, mut gi) = pair_loss_grad(&ei, &ej, y, margin)?;
        sum += loss;
        gi.iter_mut().for_each(|g| *g *= scale);
        let gj: Vector = gi.iter().map(|g| -g).collect();
        params.backward_acc(&ti, &gi, grads)?;
        params.backward_acc(&tj, &gj, grads)?;
    }
    Ok(sum * scale)
}

/// Trains an encoder on one feature of `matrix`.
///
/// The column is z-scored, cut into windows and paired per `policy`; each
/// epoch visits the pairs in a seeded random order in mini-batches, taking
/// one Adam step per batch on the mean batch loss. The returned history
/// holds the mean pair loss of every epoch, measured as the epoch ran.
pub fn train(
    matrix: &FeatureMatrix,
    feature: &str,
    config: &TrainConfig,
    policy: &PairPolicy,
) -> Result<(EncoderModel, Vec<f64>)> {
    config.validate()?;
    let raw = matrix.column(feature)?;
    let (mean, std) = column_stats(&raw);
    let normalization = NormalizationParams {
        features: vec![feature.to_string()],
        mean: vec![mean],
        std: vec![std],
    };
    let series = normalize_slice(&raw, mean, std);
    let windows = windows_from_slice(feature, &series, config.window, config.stride)?;
    let pairs = create_pairs(&windows, policy)?;
    if pairs.is_empty() {
        return Err(Error::NotEnoughWindows(windows.len()));
    }

    let (mut params, mut rng) = init_rng(config);
    let mut adam = AdamState::new(&params);
    let mut grads = params.zeros_like();
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.fill(0.0);
            let loss =
                accumulate_batch(&params, &windows, &pairs, batch, config.margin, &mut grads)?;
            epoch_sum += loss * batch.len() as f64;
            adam_step(&mut adam, &mut params, &grads, config.learning_rate)?;
        }
        let epoch_loss = epoch_sum / pairs.len() as f64;
        if !epoch_loss.is_finite() || !params.is_finite() {
            return Err(Error::DivergedLoss {
                epoch,
                loss: epoch_loss,
            });
        }
        history.push(epoch_loss);
    }

    let model = EncoderModel {
        feature: feature.to_string(),
        config: config.clone(),
        policy: policy.clone(),
        config_hash: config_hash(feature, config, policy),
        normalization,
        params,
    };
    Ok((model, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Matrix;

    fn sine_matrix(n: usize) -> FeatureMatrix {
        let col: Vec<f64> = (0..n)
            .map(|t| {
                (2.0 * std::f64::consts::PI * t as f64 / 24.0).sin()
                    + 0.05 * ((t * 7919 % 13) as f64 - 6.0) / 6.0
            })
            .collect();
        FeatureMatrix::from_columns(
            (0..n as i64).map(|t| t * 3600).collect(),
            vec![("Energy".into(), col)],
        )
        .unwrap()
    }

    fn small_config() -> TrainConfig {
        TrainConfig {
            epochs: 2,
            window: 8,
            hidden_size: 4,
            embedding_size: 3,
            batch_size: 16,
            ..Default::default()
        }
    }

    fn small_policy() -> PairPolicy {
        PairPolicy {
            negative_min_gap: 24,
            ..Default::default()
        }
    }

    #[test]
    fn zero_learning_rate_keeps_initialization() {
        let cfg = TrainConfig {
            epochs: 1,
            learning_rate: 0.0,
            ..small_config()
        };
        let (model, hist) = train(&sine_matrix(120), "Energy", &cfg, &small_policy()).unwrap();
        assert_eq!(hist.len(), 1);
        assert_eq!(model.params, initial_params(&cfg));
    }

    #[test]
    fn invalid_learning_rate_rejected() {
        for lr in [-1e-3, f64::NAN, f64::INFINITY] {
            let cfg = TrainConfig {
                learning_rate: lr,
                ..small_config()
            };
            assert!(matches!(
                train(&sine_matrix(120), "Energy", &cfg, &small_policy()),
                Err(Error::Config(_))
            ));
        }
    }

    #[test]
    fn tiny_learning_rate_stays_near_initialization() {
        let cfg = TrainConfig {
            epochs: 1,
            learning_rate: 1e-12,
            ..small_config()
        };
        let (model, hist) = train(&sine_matrix(120), "Energy", &cfg, &small_policy()).unwrap();
        assert_eq!(hist.len(), 1);
        let init = initial_params(&cfg).flatten();
        let max_delta = model
            .params
            .flatten()
            .iter()
            .zip(&init)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        // each Adam step moves a parameter by at most ~lr
        assert!(max_delta < 1e-10, "{max_delta}");
    }

    #[test]
    fn training_is_deterministic() {
        let m = sine_matrix(150);
        let (a, ha) = train(&m, "Energy", &small_config(), &small_policy()).unwrap();
        let (b, hb) = train(&m, "Energy", &small_config(), &small_policy()).unwrap();
        assert_eq!(ha, hb);
        assert_eq!(a.to_json(), b.to_json());
        assert!(ha.iter().all(|l| l.is_finite()));
    }

    #[test]
    fn checkpoint_round_trip_and_tamper_detection() {
        let (model, _) = train(
            &sine_matrix(120),
            "Energy",
            &small_config(),
            &small_policy(),
        )
        .unwrap();
        let text = model.to_json();
        let back = EncoderModel::from_json(&text).unwrap();
        assert_eq!(back, model);
        assert_eq!(back.to_json(), text);

        let tampered = text.replacen("\"epochs\": 2", "\"epochs\": 3", 1);
        assert!(matches!(
            EncoderModel::from_json(&tampered),
            Err(Error::Checkpoint(_))
        ));
        let unknown = text.replacen("\"feature\"", "\"extra\": 1,\n    \"feature\"", 1);
        assert!(EncoderModel::from_json(&unknown).is_err());
    }

    #[test]
    fn total_loss_small_cases() {
        let cfg = small_config();
        let (model, _) = train(&sine_matrix(120), "Energy", &cfg, &small_policy()).unwrap();
        let windows = model.windows_for(&sine_matrix(120)).unwrap();
        // single pair: the mean of one value
        let single = PairSet {
            i_indices: vec![3],
            j_indices: vec![40],
            labels: vec![false],
            policy: small_policy(),
        };
        let emb = embed(&model, &windows).unwrap();
        let expect = pair_loss(&emb[3], &emb[40], false, 1.0).unwrap();
        assert_eq!(total_loss(&model, &windows, &single).unwrap(), expect);

        // positive pairs of identical embeddings
        let mut zero = model.clone();
        zero.params.projection.weight = Matrix::zeros(3, 4);
        let same = PairSet {
            i_indices: vec![0, 5],
            j_indices: vec![1, 9],
            labels: vec![true, true],
            policy: small_policy(),
        };
        assert_eq!(total_loss(&zero, &windows, &same).unwrap(), 0.0);

        let bad = PairSet {
            i_indices: vec![0],
            j_indices: vec![10_000],
            labels: vec![true],
            policy: small_policy(),
        };
        assert!(total_loss(&model, &windows, &bad).is_err());
    }

    #[test]
    fn three_pair_loss_against_scalar_oracle() {
        let m = sine_matrix(120);
        let (model, _) = train(&m, "Energy", &small_config(), &small_policy()).unwrap();
        let windows = model.windows_for(&m).unwrap();
        let pairs = PairSet {
            i_indices: vec![0, 2, 7],
            j_indices: vec![1, 50, 90],
            labels: vec![true, false, false],
            policy: small_policy(),
        };
        let emb = embed(&model, &windows).unwrap();
        let mut sum = 0.0;
        for (i, j, y) in pairs.iter() {
            let mut sq = 0.0;
            for k in 0..emb[i].len() {
                sq += (emb[i][k] - emb[j][k]) * (emb[i][k] - emb[j][k]);
            }
            let d = sq.sqrt();
            let yv = if y { 1.0 } else { 0.0 };
            sum += yv * sq + (1.0 - yv) * f64::max(0.0, 1.0 - d).powi(2);
        }
        let got = total_loss(&model, &windows, &pairs).unwrap();
        assert!((got - sum / 3.0).abs() < 1e-14);
    }
}
