use serde::{Deserialize, Serialize};

use super::FeatureMatrix;
use crate::error::{Error, Result};

/// Pearson correlation coefficient, clamped to [-1, 1].
pub fn pearson_correlation(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: a.len(),
        });
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Err(Error::ConstantInput);
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub target: String,
    /// `(feature, |r|)`, sorted by score descending then name ascending.
    pub entries: Vec<(String, f64)>,
}

impl FeatureRanking {
    pub fn names(&self) -> Vec<String> {
        self.entries.iter().map(|(n, _)| n.clone()).collect()
    }
}

/// Ranks non-target features by absolute Pearson correlation with `target`.
///
/// A constant candidate column scores 0. A constant target is an error.
pub fn select_features(m: &FeatureMatrix, target: &str, k: usize) -> Result<FeatureRanking> {
    let t = m
        .feature_index(target)
        .ok_or_else(|| Error::UnknownTarget(target.to_string()))?;
    let available = m.feature_count() - 1;
    if k > available {
        return Err(Error::KTooLarge { k, available });
    }
    let target_col = m.column_at(t);
    let mut entries = Vec::with_capacity(available);
    for (c, name) in m.feature_names().iter().enumerate() {
        if c == t {
            continue;
        }
        let score = match pearson_correlation(&m.column_at(c), &target_col) {
            Ok(r) => r.abs(),
            Err(Error::ConstantInput) if m.column_at(c).iter().all(|&v| v == m.get(0, c)) => 0.0,
            Err(e) => return Err(e),
        };
        entries.push((name.clone(), score));
    }
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    entries.truncate(k);
    Ok(FeatureRanking {
        target: target.to_string(),
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn perfect_relations() {
        assert!((pearson_correlation(&[1., 2., 3.], &[2., 4., 6.]).unwrap() - 1.0).abs() < 1e-12);
        assert!((pearson_correlation(&[1., 2., 3.], &[3., 2., 1.]).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn hand_computed_point_eight() {
        // centered: a = [-1.5,-.5,.5,1.5], b = [-1.5,.5,-.5,1.5]
        // sab = 2.25 - .25 - .25 + 2.25 = 4; saa = sbb = 5  =>  r = 0.8
        let r = pearson_correlation(&[1., 2., 3., 4.], &[1., 3., 2., 4.]).unwrap();
        assert!((r - 0.8).abs() < 1e-12);
    }

    #[test]
    fn constant_input_rejected() {
        assert!(matches!(
            pearson_correlation(&[1., 1., 1.], &[1., 2., 3.]),
            Err(Error::ConstantInput)
        ));
    }

    fn matrix(seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 200;
        let target: Vec<f64> = (0..n)
            .map(|i| (i as f64 * 0.1).sin() + rng.gen_range(-0.1..0.1))
            .collect();
        let linear: Vec<f64> = target
            .iter()
            .map(|v| 3.0 * v - 1.0 + rng.gen_range(-0.3..0.3))
            .collect();
        let noise: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dup = target.clone();
        FeatureMatrix::from_columns(
            (0..n as i64).collect(),
            vec![
                ("Energy".into(), target),
                ("Noise".into(), noise),
                ("Linear".into(), linear),
                ("Copy".into(), dup),
            ],
        )
        .unwrap()
    }

    #[test]
    fn ranking_order_and_bounds() {
        let m = matrix(0);
        let r = select_features(&m, "Energy", 3).unwrap();
        assert_eq!(r.names(), vec!["Copy", "Linear", "Noise"]);
        assert!((r.entries[0].1 - 1.0).abs() < 1e-12);
        // oracle check of the ordering
        let t = m.column("Energy").unwrap();
        let lin = pearson_correlation(&m.column("Linear").unwrap(), &t)
            .unwrap()
            .abs();
        let noise = pearson_correlation(&m.column("Noise").unwrap(), &t)
            .unwrap()
            .abs();
        assert!(lin > noise);
        assert!(matches!(
            select_features(&m, "Energy", 4),
            Err(Error::KTooLarge { .. })
        ));
        assert!(matches!(
            select_features(&m, "Nope", 1),
            Err(Error::UnknownTarget(_))
        ));
    }

    #[test]
    fn ties_break_by_name() {
        let t = vec![1.0, 2.0, 3.0];
        let m = FeatureMatrix::from_columns(
            vec![0, 1, 2],
            vec![
                ("t".into(), t.clone()),
                ("b".into(), t.clone()),
                ("a".into(), t),
            ],
        )
        .unwrap();
        assert_eq!(select_features(&m, "t", 2).unwrap().names(), vec!["a", "b"]);
    }

    proptest! {
        #[test]
        fn symmetric_bounded_affine_invariant(
            pairs in proptest::collection::vec((-100f64..100.0, -100f64..100.0), 3..40),
            scale in 0.01f64..100.0,
            shift in -50f64..50.0,
        ) {
            let a: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let b: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let (Ok(ab), Ok(ba)) = (pearson_correlation(&a, &b), pearson_correlation(&b, &a)) else {
                return Ok(());
            };
            prop_assert_eq!(ab, ba);
            prop_assert!(ab.abs() <= 1.0 + 1e-12);
            let a2: Vec<f64> = a.iter().map(|v| v * scale + shift).collect();
            let r2 = pearson_correlation(&a2, &b).unwrap();
            prop_assert!((r2 - ab).abs() < 1e-9);
        }

        #[test]
        fn ranking_invariant_under_rescaling(seed in 0u64..20, scales in proptest::collection::vec(-10f64..10.0, 4)) {
            prop_assume!(scales.iter().all(|s| s.abs() > 0.05));
            let m = matrix(seed);
            let scaled = m.map_columns(|c, col| col.iter().map(|v| v * scales[c] + 7.0).collect());
            let a = select_features(&m, "Energy", 3).unwrap().names();
            let b = select_features(&scaled, "Energy", 3).unwrap().names();
            prop_assert_eq!(a, b);
        }
    }
}
