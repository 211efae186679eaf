use serde::{Deserialize, Serialize};

use super::FeatureMatrix;
use crate::error::{Error, Result};

/// Floor applied to per-feature standard deviations.
pub const STD_FLOOR: f64 = 1e-12;

/// Per-feature z-score parameters, aligned with `features`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationParams {
    pub features: Vec<String>,
    pub mean: Vec<f64>,
    /// Sample standard deviation, clamped at [`STD_FLOOR`].
    pub std: Vec<f64>,
}

impl NormalizationParams {
    pub fn for_feature(&self, name: &str) -> Result<(f64, f64)> {
        self.features
            .iter()
            .position(|f| f == name)
            .map(|i| (self.mean[i], self.std[i]))
            .ok_or_else(|| Error::UnknownFeature(name.to_string()))
    }
}

/// Mean and clamped sample std of one column.
///
/// A constant column gets its first value as the mean (exactly), so it
/// normalizes to exact zeros.
pub fn column_stats(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 1.0);
    }
    if values.iter().all(|&v| v == values[0]) {
        return (values[0], STD_FLOOR);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    (mean, var.sqrt().max(STD_FLOOR))
}

pub fn normalize_slice(values: &[f64], mean: f64, std: f64) -> Vec<f64> {
    values.iter().map(|v| (v - mean) / std).collect()
}

pub fn zscore_normalize(m: &FeatureMatrix) -> Result<(FeatureMatrix, NormalizationParams)> {
    if m.is_empty() {
        return Err(Error::EmptyFile);
    }
    let mut means = Vec::with_capacity(m.feature_count());
    let mut stds = Vec::with_capacity(m.feature_count());
    let out = m.map_columns(|_, col| {
        let (mean, std) = column_stats(col);
        means.push(mean);
        stds.push(std);
        normalize_slice(col, mean, std)
    });
    let params = NormalizationParams {
        features: m.feature_names().to_vec(),
        mean: means,
        std: stds,
    };
    Ok((out, params))
}

pub fn denormalize(m: &FeatureMatrix, params: &NormalizationParams) -> Result<FeatureMatrix> {
    if params.features.as_slice() != m.feature_names() {
        return Err(Error::ShapeMismatch(
            "normalization params do not match the matrix features".into(),
        ));
    }
    Ok(m.map_columns(|c, col| {
        col.iter()
            .map(|v| v * params.std[c] + params.mean[c])
            .collect()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn single(col: Vec<f64>) -> FeatureMatrix {
        let ts = (0..col.len() as i64).collect();
        FeatureMatrix::from_columns(ts, vec![("x".into(), col)]).unwrap()
    }

    fn mean_std(v: &[f64]) -> (f64, f64) {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var.sqrt())
    }

    #[test]
    fn one_two_three() {
        let (z, _) = zscore_normalize(&single(vec![1.0, 2.0, 3.0])).unwrap();
        let (mean, std) = mean_std(&z.column_at(0));
        assert!(mean.abs() < 1e-9);
        assert!((std - 1.0).abs() < 1e-9);
    }

    #[test]
    fn constant_column_maps_to_zero() {
        for c in [5.0, 0.1, -1e300] {
            let (z, p) = zscore_normalize(&single(vec![c; 3])).unwrap();
            assert_eq!(z.column_at(0), vec![0.0; 3]);
            assert_eq!(p.std[0], STD_FLOOR);
        }
    }

    proptest! {
        #[test]
        fn round_trip(col in proptest::collection::vec(-1e3f64..1e3, 2..50)) {
            let m = single(col.clone());
            let (z, p) = zscore_normalize(&m).unwrap();
            let back = denormalize(&z, &p).unwrap();
            for (a, b) in back.column_at(0).iter().zip(&col) {
                prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
            }
        }

        #[test]
        fn normalized_moments(col in proptest::collection::vec(-1e3f64..1e3, 3..50)) {
            prop_assume!(col.iter().any(|&v| (v - col[0]).abs() > 1e-3));
            let (z, _) = zscore_normalize(&single(col)).unwrap();
            let (mean, std) = mean_std(&z.column_at(0));
            prop_assert!(mean.abs() < 1e-9);
            prop_assert!((std - 1.0).abs() < 1e-9);
        }
    }
}
