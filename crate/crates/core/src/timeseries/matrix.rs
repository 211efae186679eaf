use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Aligned multi-feature time series: one row per instant, one column per feature.
///
/// Timestamps are epoch seconds and strictly increasing. Every value is finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    timestamps: Vec<i64>,
    feature_names: Vec<String>,
    /// Row-major, `timestamps.len() * feature_names.len()` entries.
    values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(timestamps: Vec<i64>, feature_names: Vec<String>, values: Vec<f64>) -> Result<Self> {
        let rows = timestamps.len();
        let cols = feature_names.len();
        if values.len() != rows * cols {
            return Err(Error::InvalidMatrix(format!(
                "{} values for {rows} rows x {cols} features",
                values.len()
            )));
        }
        if let Some(w) = timestamps.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::InvalidMatrix(format!(
                "timestamps not strictly increasing at row {}",
                w + 1
            )));
        }
        for (i, name) in feature_names.iter().enumerate() {
            if feature_names[..i].contains(name) {
                return Err(Error::InvalidMatrix(format!(
                    "duplicate feature name `{name}`"
                )));
            }
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidMatrix(format!(
                "non-finite value at row {}, column `{}`",
                pos / cols,
                feature_names[pos % cols]
            )));
        }
        Ok(Self {
            timestamps,
            feature_names,
            values,
        })
    }

    /// Builds a matrix from whole columns.
    pub fn from_columns(timestamps: Vec<i64>, columns: Vec<(String, Vec<f64>)>) -> Result<Self> {
        let rows = timestamps.len();
        let mut names = Vec::with_capacity(columns.len());
        let mut values = vec![0.0; rows * columns.len()];
        let cols = columns.len();
        for (c, (name, col)) in columns.into_iter().enumerate() {
            if col.len() != rows {
                return Err(Error::InvalidMatrix(format!(
                    "column `{name}` has {} values, expected {rows}",
                    col.len()
                )));
            }
            for (r, v) in col.into_iter().enumerate() {
                values[r * cols + c] = v;
            }
            names.push(name);
        }
        Self::new(timestamps, names, values)
    }

    pub fn row_count(&self) -> usize {
        self.timestamps.len()
    }

    pub fn feature_count(&self) -> usize {
        self.feature_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.feature_count() + col]
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }

    pub fn column_at(&self, col: usize) -> Vec<f64> {
        let cols = self.feature_count();
        self.values
            .iter()
            .skip(col)
            .step_by(cols)
            .copied()
            .collect()
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        self.feature_index(name)
            .map(|c| self.column_at(c))
            .ok_or_else(|| Error::UnknownFeature(name.to_string()))
    }

    /// Returns a copy with every column passed through `f`.
    pub(crate) fn map_columns(&self, mut f: impl FnMut(usize, &[f64]) -> Vec<f64>) -> Self {
        let cols = self.feature_count();
        let mut values = vec![0.0; self.values.len()];
        for c in 0..cols {
            let mapped = f(c, &self.column_at(c));
            for (r, v) in mapped.into_iter().enumerate() {
                values[r * cols + c] = v;
            }
        }
        Self {
            timestamps: self.timestamps.clone(),
            feature_names: self.feature_names.clone(),
            values,
        }
    }
}
