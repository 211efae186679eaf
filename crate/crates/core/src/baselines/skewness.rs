use serde::{Deserialize, Serialize};

use crate::contrastive::{DetectionResult, DetectionUnit};
use crate::error::{Error, Result};
use crate::timeseries::FeatureMatrix;

/// Bias-corrected sample skewness
/// `n / ((n-1)(n-2)) · Σ ((x_i − x̄) / s)³` with `s` the sample (n−1) standard deviation.
pub fn skewness(values: &[f64]) -> Result<f64> {
    let n = values.len();
    if n < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: n });
    }
    if values.iter().all(|&v| v == values[0]) {
        return Err(Error::ZeroVariance);
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let s = var.sqrt();
    if s == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let cubes: f64 = values.iter().map(|v| ((v - mean) / s).powi(3)).sum();
    Ok(nf / ((nf - 1.0) * (nf - 2.0)) * cubes)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SkewnessConfig {
    pub window: usize,
    pub cutoff: f64,
}

impl Default for SkewnessConfig {
    fn default() -> Self {
        Self {
            window: 24,
            cutoff: 2.0,
        }
    }
}

/// Rolling skewness of one feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkewnessReport {
    pub feature: String,
    pub window: usize,
    pub cutoff: f64,
    /// γ of the window starting at each index; constant windows report 0.
    pub values: Vec<f64>,
    /// `|γ| > cutoff` per window.
    pub window_flags: Vec<bool>,
    /// A row is flagged when any window covering it is flagged.
    pub row_flags: Vec<bool>,
}

impl SkewnessReport {
    /// Window-level result: score `|γ|`, threshold the cutoff.
    pub fn window_result(&self) -> Result<DetectionResult> {
        let n = self.values.len();
        DetectionResult::from_scores(
            DetectionUnit::Instance,
            (0..n).collect(),
            vec![None; n],
            self.values.iter().map(|g| g.abs()).collect(),
            self.cutoff,
            self.model_id(),
        )
    }

    /// Row-level result: score is the largest `|γ|` of any covering window.
    pub fn row_result(&self) -> Result<DetectionResult> {
        let rows = self.row_flags.len();
        let mut scores = vec![0.0f64; rows];
        for (start, g) in self.values.iter().enumerate() {
            for s in &mut scores[start..start + self.window] {
                *s = s.max(g.abs());
            }
        }
        DetectionResult::from_scores(
            DetectionUnit::Row,
            (0..rows).collect(),
            vec![None; rows],
            scores,
            self.cutoff,
            self.model_id(),
        )
    }

    fn model_id(&self) -> String {
        format!("skewness-w{}-c{}", self.window, self.cutoff)
    }
}

pub fn rolling_skewness(series: &[f64], window: usize) -> Result<Vec<f64>> {
    if window < 3 {
        return Err(Error::Config(format!(
            "skewness window must be >= 3, got {window}"
        )));
    }
    if window > series.len() {
        return Err(Error::WindowTooLong {
            length: window,
            rows: series.len(),
        });
    }
    series
        .windows(window)
        .map(|w| match skewness(w) {
            Err(Error::ZeroVariance) => Ok(0.0),
            other => other,
        })
        .collect()
}

pub fn skewness_anomalies(
    m: &FeatureMatrix,
    feature: &str,
    window: usize,
    cutoff: f64,
) -> Result<SkewnessReport> {
    if cutoff.is_nan() {
        return Err(Error::Config("cutoff is NaN".into()));
    }
    let series = m.column(feature)?;
    let values = rolling_skewness(&series, window)?;
    let window_flags: Vec<bool> = values.iter().map(|g| g.abs() > cutoff).collect();
    let mut row_flags = vec![false; series.len()];
    for (start, _) in window_flags.iter().enumerate().filter(|(_, &f)| f) {
        row_flags[start..start + window].fill(true);
    }
    Ok(SkewnessReport {
        feature: feature.to_string(),
        window,
        cutoff,
        values,
        window_flags,
        row_flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    fn matrix(col: Vec<f64>) -> FeatureMatrix {
        FeatureMatrix::from_columns((0..col.len() as i64).collect(), vec![("x".into(), col)])
            .unwrap()
    }

    #[test]
    fn symmetric_is_zero() {
        assert!(skewness(&[-1.0, 0.0, 1.0]).unwrap().abs() < 1e-12);
    }

    #[test]
    fn zeros_and_ten_by_hand() {
        // mean 2.5, deviations (-2.5, -2.5, -2.5, 7.5), s² = 75/3 = 25, s = 5
        // Σ(d/s)³ = 3·(-0.125) + 1.5³ = 3.0; factor 4/(3·2) = 2/3  →  γ = 2
        assert!((skewness(&[0.0, 0.0, 0.0, 10.0]).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            skewness(&[1.0, 2.0]),
            Err(Error::TooFewPoints { .. })
        ));
        assert!(matches!(skewness(&[4.0; 5]), Err(Error::ZeroVariance)));
    }

    #[test]
    fn gaussian_noise_rarely_flags() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let col: Vec<f64> = (0..2880).map(|_| normal.sample(&mut rng)).collect();
        let r = skewness_anomalies(&matrix(col), "x", 24, 2.0).unwrap();
        let rate = r.row_flags.iter().filter(|&&f| f).count() as f64 / 2880.0;
        assert!(rate < 0.10, "flag rate {rate}");
    }

    #[test]
    fn spike_windows_are_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut col: Vec<f64> = (0..200).map(|_| normal.sample(&mut rng)).collect();
        col[100] += 10.0;
        let r = skewness_anomalies(&matrix(col), "x", 24, 2.0).unwrap();
        for start in 77..=100 {
            assert!(r.window_flags[start], "window {start}");
        }
        assert!(r.row_flags[100]);
        let rows = r.row_result().unwrap();
        assert_eq!(rows.flags, r.row_flags);
        let wins = r.window_result().unwrap();
        assert_eq!(wins.flags, r.window_flags);
    }

    #[test]
    fn huge_cutoff_flags_nothing() {
        let r = skewness_anomalies(&matrix(vec![0.0, 0.0, 0.0, 10.0, 1.0]), "x", 4, 1e9).unwrap();
        assert!(r.row_flags.iter().all(|&f| !f));
    }

    proptest! {
        #[test]
        fn affine_behaviour(
            v in proptest::collection::vec(-100f64..100.0, 3..40),
            scale in 0.01f64..100.0,
            shift in -100f64..100.0,
        ) {
            let Ok(g) = skewness(&v) else { return Ok(()); };
            let spread = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - v.iter().cloned().fold(f64::INFINITY, f64::min);
            prop_assume!(spread > 1e-6);
            let pos: Vec<f64> = v.iter().map(|x| x * scale + shift).collect();
            let neg: Vec<f64> = v.iter().map(|x| -x * scale + shift).collect();
            prop_assert!((skewness(&pos).unwrap() - g).abs() < 1e-9);
            prop_assert!((skewness(&neg).unwrap() + g).abs() < 1e-9);
        }
    }
}
