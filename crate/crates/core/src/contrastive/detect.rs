use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::model::{embed, EncoderModel};
use super::pairs::{create_pairs, PairPolicy};
use crate::error::{Error, Result};
use crate::nn::{euclidean_distance, Vector};
use crate::timeseries::{FeatureMatrix, Window};

/// Default decision threshold on embedding distance.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DetectionUnit {
    /// Two window indices.
    Pair,
    /// One window index.
    Instance,
    /// One time point (row of the input).
    Row,
}

impl fmt::Display for DetectionUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DetectionUnit::Pair => "pair",
            DetectionUnit::Instance => "instance",
            DetectionUnit::Row => "row",
        })
    }
}

/// Which pairs are scored during detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PairScope {
    /// Only the temporally adjacent (similar) pairs.
    #[default]
    Similar,
    /// Similar and dissimilar pairs, as used during training.
    All,
}

/// Scores, flags and threshold for one detection pass.
///
/// `flags[k] == (scores[k] > threshold)` for every `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub unit: DetectionUnit,
    pub index_i: Vec<usize>,
    /// Second index for pairs; `None` for instances.
    pub index_j: Vec<Option<usize>>,
    pub scores: Vec<f64>,
    pub flags: Vec<bool>,
    pub threshold: f64,
    pub model_id: String,
}

impl DetectionResult {
    pub fn from_scores(
        unit: DetectionUnit,
        index_i: Vec<usize>,
        index_j: Vec<Option<usize>>,
        scores: Vec<f64>,
        threshold: f64,
        model_id: impl Into<String>,
    ) -> Result<Self> {
        if index_i.len() != scores.len() || index_j.len() != scores.len() {
            return Err(Error::LengthMismatch {
                left: index_i.len(),
                right: scores.len(),
            });
        }
        if threshold.is_nan() {
            return Err(Error::Config("threshold is NaN".into()));
        }
        if scores.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::NonFinite("detection scores".into()));
        }
        let flags = scores.iter().map(|&s| s > threshold).collect();
        Ok(Self {
            unit,
            index_i,
            index_j,
            scores,
            flags,
            threshold,
            model_id: model_id.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn flagged_count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    /// Same scores, new threshold.
    pub fn rethreshold(&self, threshold: f64) -> Result<Self> {
        Self::from_scores(
            self.unit,
            self.index_i.clone(),
            self.index_j.clone(),
            self.scores.clone(),
            threshold,
            self.model_id.clone(),
        )
    }

    /// Instance view of a pair result over `instances` items: an instance's
    /// score is the largest score of any pair touching it (0 if none), so it
    /// is flagged exactly when one of its pairs is.
    pub fn to_instances(&self, instances: usize) -> Result<Self> {
        if self.unit != DetectionUnit::Pair {
            return Ok(self.clone());
        }
        let mut scores = vec![0.0f64; instances];
        for (k, &s) in self.scores.iter().enumerate() {
            for idx in std::iter::once(self.index_i[k]).chain(self.index_j[k]) {
                let slot = scores.get_mut(idx).ok_or(Error::LengthMismatch {
                    left: idx + 1,
                    right: instances,
                })?;
                *slot = slot.max(s);
            }
        }
        Self::from_scores(
            DetectionUnit::Instance,
            (0..instances).collect(),
            vec![None; instances],
            scores,
            self.threshold,
            self.model_id.clone(),
        )
    }

    /// Row view of an instance result: each window speaks for its last row.
    /// Rows not ending any window score 0.
    pub fn instances_to_rows(&self, windows: &[Window], rows: usize) -> Result<Self> {
        if self.unit != DetectionUnit::Instance {
            return Err(Error::Config(format!(
                "expected instance results, got {}",
                self.unit
            )));
        }
        let mut scores = vec![0.0f64; rows];
        for (&w, &s) in self.index_i.iter().zip(&self.scores) {
            let end = windows
                .get(w)
                .map(Window::end_index)
                .filter(|&e| e < rows)
                .ok_or(Error::LengthMismatch {
                    left: w + 1,
                    right: windows.len(),
                })?;
            scores[end] = scores[end].max(s);
        }
        Self::from_scores(
            DetectionUnit::Row,
            (0..rows).collect(),
            vec![None; rows],
            scores,
            self.threshold,
            self.model_id.clone(),
        )
    }

    /// Writes `unit,index_i,index_j,score,flagged`; `index_j` is blank for instances.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let csv_err = |e: csv::Error| Error::Csv(e.to_string());
        w.write_record(["unit", "index_i", "index_j", "score", "flagged"])
            .map_err(csv_err)?;
        for k in 0..self.len() {
            w.write_record([
                self.unit.to_string(),
                self.index_i[k].to_string(),
                self.index_j[k].map(|j| j.to_string()).unwrap_or_default(),
                self.scores[k].to_string(),
                u8::from(self.flags[k]).to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<detection csv>", e))?;
        Ok(())
    }
}

/// `min_i ‖f(x') − r_i‖` over the reference embeddings. `x_new` must already
/// be normalized with the model's parameters.
pub fn anomaly_score_min(
    x_new: &Window,
    model: &EncoderModel,
    reference: &[Vector],
) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    let e = model.params.encode(&x_new.values)?;
    min_distance(&e, reference)
}

pub fn min_distance(embedding: &[f64], reference: &[Vector]) -> Result<f64> {
    let mut best = f64::INFINITY;
    for r in reference {
        if r.len() != embedding.len() {
            return Err(Error::ShapeMismatch("reference embedding size".into()));
        }
        best = best.min(euclidean_distance(embedding, r));
    }
    if best.is_finite() {
        Ok(best)
    } else {
        Err(Error::EmptyReference)
    }
}

/// Min-distance scoring of every window of `matrix` against reference embeddings.
pub fn score_against_reference(
    model: &EncoderModel,
    matrix: &FeatureMatrix,
    reference: &[Vector],
    threshold: f64,
) -> Result<DetectionResult> {
    if reference.is_empty() {
        return Err(Error::EmptyReference);
    }
    let windows = model.windows_for(matrix)?;
    let emb = embed(model, &windows)?;
    let scores = emb
        .iter()
        .map(|e| min_distance(e, reference))
        .collect::<Result<Vec<_>>>()?;
    DetectionResult::from_scores(
        DetectionUnit::Instance,
        (0..windows.len()).collect(),
        vec![None; windows.len()],
        scores,
        threshold,
        model.id(),
    )
}

/// Pairwise detection: build pairs over the model's windows of `feature`,
/// embed both sides, and flag pairs whose embedding distance exceeds
/// `threshold`.
pub fn detect_anomalies(
    feature: &str,
    model: &EncoderModel,
    matrix: &FeatureMatrix,
    threshold: f64,
    policy: &PairPolicy,
    scope: PairScope,
) -> Result<DetectionResult> {
    if feature != model.feature {
        return Err(Error::IncompatibleModel(format!(
            "model was trained on `{}`, not `{feature}`",
            model.feature
        )));
    }
    let windows = model.windows_for(matrix)?;
    let pairs = match scope {
        PairScope::Similar => {
            let relaxed = PairPolicy {
                allow_no_negatives: true,
                ..policy.clone()
            };
            create_pairs(&windows, &relaxed)?.similar_only()
        }
        PairScope::All => create_pairs(&windows, policy)?,
    };
    let emb = embed(model, &windows)?;
    let scores = pairs
        .iter()
        .map(|(i, j, _)| euclidean_distance(&emb[i], &emb[j]))
        .collect();
    DetectionResult::from_scores(
        DetectionUnit::Pair,
        pairs.i_indices.clone(),
        pairs.j_indices.iter().map(|&j| Some(j)).collect(),
        scores,
        threshold,
        model.id(),
    )
}
