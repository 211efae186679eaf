use serde::{Deserialize, Serialize};

use super::FeatureMatrix;
use crate::error::{Error, Result};

/// A contiguous slice of one feature: the unit instance fed to the encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub source_feature: String,
    pub start_index: usize,
    pub values: Vec<f64>,
}

impl Window {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Index of the last covered row.
    pub fn end_index(&self) -> usize {
        self.start_index + self.values.len() - 1
    }
}

/// Number of windows produced for a series of `rows` points.
pub fn window_count(rows: usize, length: usize, stride: usize) -> usize {
    if length > rows || stride == 0 {
        0
    } else {
        (rows - length) / stride + 1
    }
}

pub fn windows_from_slice(
    feature: &str,
    series: &[f64],
    length: usize,
    stride: usize,
) -> Result<Vec<Window>> {
    if length < 2 {
        return Err(Error::Config(format!(
            "window length must be >= 2, got {length}"
        )));
    }
    if stride < 1 {
        return Err(Error::Config("stride must be >= 1".into()));
    }
    if length > series.len() {
        return Err(Error::WindowTooLong {
            length,
            rows: series.len(),
        });
    }
    Ok((0..=series.len() - length)
        .step_by(stride)
        .map(|start| Window {
            source_feature: feature.to_string(),
            start_index: start,
            values: series[start..start + length].to_vec(),
        })
        .collect())
}

pub fn make_windows(
    m: &FeatureMatrix,
    feature: &str,
    length: usize,
    stride: usize,
) -> Result<Vec<Window>> {
    windows_from_slice(feature, &m.column(feature)?, length, stride)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_cases() {
        let s: Vec<f64> = (0..10).map(f64::from).collect();
        let w = windows_from_slice("x", &s, 5, 5).unwrap();
        assert_eq!(
            w.iter().map(|w| w.start_index).collect::<Vec<_>>(),
            vec![0, 5]
        );
        assert_eq!(w[1].values, vec![5., 6., 7., 8., 9.]);
        assert_eq!(w[1].end_index(), 9);
        assert_eq!(windows_from_slice("x", &s, 10, 1).unwrap().len(), 1);
        assert!(matches!(
            windows_from_slice("x", &s, 11, 1),
            Err(Error::WindowTooLong { .. })
        ));
        assert!(windows_from_slice("x", &s, 1, 1).is_err());
        assert!(windows_from_slice("x", &s, 3, 0).is_err());
    }

    #[test]
    fn daily_windows_over_120_days() {
        // 120 days x 24 hourly samples, W = 24, stride 1
        let s = vec![0.0; 120 * 24];
        assert_eq!(windows_from_slice("x", &s, 24, 1).unwrap().len(), 2857);
    }

    proptest! {
        #[test]
        fn count_formula(n in 2usize..200, w in 2usize..50, s in 1usize..20) {
            prop_assume!(w <= n);
            let series = vec![1.0; n];
            let got = windows_from_slice("x", &series, w, s).unwrap();
            prop_assert_eq!(got.len(), (n - w) / s + 1);
            prop_assert_eq!(got.len(), window_count(n, w, s));
            prop_assert!(got.iter().all(|x| x.start_index + x.len() <= n));
        }
    }
}
