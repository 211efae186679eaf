use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::Window;

/// Temporal-proximity pairing rule.
///
/// Windows whose starts are at most `positive_max_lag` apart are similar;
/// windows at least `negative_min_gap` apart are candidate dissimilar pairs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairPolicy {
    pub positive_max_lag: usize,
    pub negative_min_gap: usize,
    pub negatives_per_positive: usize,
    pub seed: u64,
    /// Return only similar pairs instead of failing when the series is too
    /// short to contain any dissimilar pair.
    pub allow_no_negatives: bool,
}

impl Default for PairPolicy {
    fn default() -> Self {
        Self {
            positive_max_lag: 1,
            negative_min_gap: 7 * 24,
            negatives_per_positive: 1,
            seed: 0,
            allow_no_negatives: false,
        }
    }
}

impl PairPolicy {
    pub fn validate(&self) -> Result<()> {
        if self.positive_max_lag < 1 || self.negatives_per_positive < 1 {
            return Err(Error::Config(
                "positive_max_lag and negatives_per_positive must be >= 1".into(),
            ));
        }
        if self.positive_max_lag >= self.negative_min_gap {
            return Err(Error::Config(format!(
                "positive_max_lag ({}) must be smaller than negative_min_gap ({})",
                self.positive_max_lag, self.negative_min_gap
            )));
        }
        Ok(())
    }
}

/// Labeled index pairs into a window list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairSet {
    pub i_indices: Vec<usize>,
    pub j_indices: Vec<usize>,
    /// `true` for similar pairs (y = 1).
    pub labels: Vec<bool>,
    pub policy: PairPolicy,
}

impl PairSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&y| y).count()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, bool)> + '_ {
        self.i_indices
            .iter()
            .zip(&self.j_indices)
            .zip(&self.labels)
            .map(|((&i, &j), &y)| (i, j, y))
    }

    /// Keeps only the similar pairs.
    pub fn similar_only(&self) -> PairSet {
        let mut out = PairSet {
            i_indices: Vec::new(),
            j_indices: Vec::new(),
            labels: Vec::new(),
            policy: self.policy.clone(),
        };
        for (i, j, y) in self.iter().filter(|p| p.2) {
            out.i_indices.push(i);
            out.j_indices.push(j);
            out.labels.push(y);
        }
        out
    }

    fn push(&mut self, i: usize, j: usize, y: bool) {
        self.i_indices.push(i);
        self.j_indices.push(j);
        self.labels.push(y);
    }
}

/// Builds similar and dissimilar pairs from windows sorted by start index.
///
/// Each window with at least one successor within `positive_max_lag` is
/// paired with one such successor (chosen uniformly when several qualify).
/// Each similar pair is followed by `negatives_per_positive` dissimilar pairs
/// drawn uniformly from all index pairs whose starts differ by at least
/// `negative_min_gap`.
pub fn create_pairs(windows: &[Window], policy: &PairPolicy) -> Result<PairSet> {
    policy.validate()?;
    if windows.len() < 2 {
        return Err(Error::NotEnoughWindows(windows.len()));
    }
    let starts: Vec<usize> = windows.iter().map(|w| w.start_index).collect();
    if starts.windows(2).any(|s| s[0] >= s[1]) {
        return Err(Error::Config(
            "windows must be sorted by strictly increasing start".into(),
        ));
    }
    let n = starts.len();

    // Dissimilar candidates: for window a, every b >= first_far[a].
    let first_far: Vec<usize> = starts
        .iter()
        .map(|&s| starts.partition_point(|&t| t < s + policy.negative_min_gap))
        .collect();
    let mut cumulative = Vec::with_capacity(n);
    let mut total: u64 = 0;
    for &f in &first_far {
        total += (n - f) as u64;
        cumulative.push(total);
    }
    if total == 0 && !policy.allow_no_negatives {
        return Err(Error::NoNegativesAvailable {
            min_gap: policy.negative_min_gap,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(policy.seed);
    let mut set = PairSet {
        i_indices: Vec::new(),
        j_indices: Vec::new(),
        labels: Vec::new(),
        policy: policy.clone(),
    };
    for a in 0..n - 1 {
        let near_end = starts.partition_point(|&t| t <= starts[a] + policy.positive_max_lag);
        let candidates = near_end - (a + 1);
        if candidates == 0 {
            continue;
        }
        let j = if candidates == 1 {
            a + 1
        } else {
            a + 1 + rng.gen_range(0..candidates)
        };
        set.push(a, j, true);
        if total == 0 {
            continue;
        }
        for _ in 0..policy.negatives_per_positive {
            let u = rng.gen_range(0..total);
            let i = cumulative.partition_point(|&c| c <= u);
            let before = if i == 0 { 0 } else { cumulative[i - 1] };
            let j = first_far[i] + (u - before) as usize;
            set.push(i, j, false);
        }
    }
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::timeseries::windows_from_slice;

    fn windows(n: usize, w: usize) -> Vec<Window> {
        windows_from_slice("x", &vec![0.0; n], w, 1).unwrap()
    }

    #[test]
    fn three_windows_without_room_for_negatives() {
        let ws = windows(5, 3);
        assert!(matches!(
            create_pairs(&ws, &PairPolicy::default()),
            Err(Error::NoNegativesAvailable { .. })
        ));
        let policy = PairPolicy {
            allow_no_negatives: true,
            ..Default::default()
        };
        let p = create_pairs(&ws, &policy).unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.positives(), 2);
        assert_eq!(
            (p.i_indices.clone(), p.j_indices.clone()),
            (vec![0, 1], vec![1, 2])
        );
    }

    #[test]
    fn hourly_120_days_gives_2856_positives() {
        let ws = windows(2880, 24);
        assert_eq!(ws.len(), 2857);
        let p = create_pairs(&ws, &PairPolicy::default()).unwrap();
        assert_eq!(p.positives(), 2856);
        assert_eq!(p.len(), 2 * 2856);
        for (i, j, y) in p.iter() {
            assert_ne!(i, j);
            assert!(i < ws.len() && j < ws.len());
            let gap = ws[j].start_index.abs_diff(ws[i].start_index);
            if y {
                assert_eq!(gap, 1);
            } else {
                assert!(gap >= 168);
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let ws = windows(400, 24);
        let policy = PairPolicy {
            negatives_per_positive: 3,
            positive_max_lag: 4,
            seed: 11,
            ..Default::default()
        };
        let a = create_pairs(&ws, &policy).unwrap();
        let b = create_pairs(&ws, &policy).unwrap();
        assert_eq!(a, b);
        let c = create_pairs(&ws, &PairPolicy { seed: 12, ..policy }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn negatives_cover_the_candidate_set() {
        // 3 windows with starts 0,1,2 and min gap 2: the only dissimilar pair is (0, 2).
        let ws = windows(6, 4);
        let policy = PairPolicy {
            negative_min_gap: 2,
            negatives_per_positive: 5,
            ..Default::default()
        };
        let p = create_pairs(&ws, &policy).unwrap();
        for (i, j, y) in p.iter().filter(|p| !p.2) {
            assert!(!y);
            assert_eq!((i, j), (0, 2));
        }
    }

    #[test]
    fn invalid_policies() {
        let ws = windows(10, 2);
        let bad = PairPolicy {
            positive_max_lag: 5,
            negative_min_gap: 5,
            ..Default::default()
        };
        assert!(matches!(create_pairs(&ws, &bad), Err(Error::Config(_))));
        assert!(matches!(
            create_pairs(&ws[..1], &PairPolicy::default()),
            Err(Error::NotEnoughWindows(1))
        ));
    }
}
