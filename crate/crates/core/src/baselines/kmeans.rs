//! Lloyd's k-means with seeded k-means++ seeding, and distance-to-centroid
//! anomaly flagging.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::contrastive::{DetectionResult, DetectionUnit};
use crate::error::{Error, Result};
use crate::nn::squared_distance;
use crate::timeseries::{column_stats, normalize_slice, windows_from_slice, FeatureMatrix, Window};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansModel {
    pub k: usize,
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    /// Sum of squared distances to the assigned centroids.
    pub inertia: f64,
    /// Inertia after every assignment step, initial assignment first.
    pub inertia_history: Vec<f64>,
    pub iterations_run: usize,
    pub converged: bool,
    pub seed: u64,
}

impl KMeansModel {
    pub fn dim(&self) -> usize {
        self.centroids.first().map_or(0, Vec::len)
    }

    /// Index of the nearest centroid (lowest index on ties) and the squared distance.
    pub fn nearest(&self, p: &[f64]) -> (usize, f64) {
        nearest(&self.centroids, p)
    }
}

fn nearest(centroids: &[Vec<f64>], p: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, mu) in centroids.iter().enumerate() {
        let d = squared_distance(p, mu);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn check_dims(points: &[Vec<f64>]) -> Result<usize> {
    let dim = points.first().map_or(0, Vec::len);
    if dim == 0 {
        return Err(Error::DimMismatch {
            expected: 1,
            got: 0,
        });
    }
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(Error::DimMismatch {
            expected: dim,
            got: p.len(),
        });
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("k-means input".into()));
    }
    Ok(dim)
}

/// k-means++ seeding: first centre uniform, the rest drawn with probability
/// proportional to the squared distance to the nearest chosen centre.
fn seed_centroids(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = vec![points[rng.gen_range(0..n)].clone()];
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.gen_range(0.0..total);
            let mut acc = 0.0;
            let mut pick = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                acc += d;
                if acc > target && d > 0.0 {
                    pick = i;
                    break;
                }
            }
            pick
        } else {
            rng.gen_range(0..n)
        };
        centroids.push(points[next].clone());
        let c = centroids.last().unwrap();
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min(squared_distance(p, c));
        }
    }
    centroids
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut inertia = 0.0;
    let labels = points
        .iter()
        .map(|p| {
            let (c, d) = nearest(centroids, p);
            inertia += d;
            c
        })
        .collect();
    (labels, inertia)
}

/// Means of the assigned points. An empty cluster takes the point farthest
/// from its current centroid, which then leaves its old cluster.
fn update(points: &[Vec<f64>], labels: &mut [usize], centroids: &mut [Vec<f64>]) {
    let k = centroids.len();
    let dim = points[0].len();
    loop {
        let mut counts = vec![0usize; k];
        for &l in labels.iter() {
            counts[l] += 1;
        }
        let Some(empty) = counts.iter().position(|&c| c == 0) else {
            break;
        };
        let far = (0..points.len())
            .filter(|&i| counts[labels[i]] > 1)
            .max_by(|&a, &b| {
                let da = squared_distance(&points[a], &centroids[labels[a]]);
                let db = squared_distance(&points[b], &centroids[labels[b]]);
                da.total_cmp(&db).then(b.cmp(&a))
            })
            .expect("k <= n leaves a cluster with two or more points");
        labels[far] = empty;
    }
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels.iter()) {
        counts[l] += 1;
        for (s, v) in sums[l].iter_mut().zip(p) {
            *s += v;
        }
    }
    for ((c, s), n) in centroids.iter_mut().zip(sums).zip(counts) {
        *c = s.into_iter().map(|v| v / n as f64).collect();
    }
}

pub fn kmeans_fit(
    points: &[Vec<f64>],
    k: usize,
    max_iter: usize,
    seed: u64,
) -> Result<KMeansModel> {
    if k == 0 || points.len() < k {
        return Err(Error::TooFewPoints {
            needed: k.max(1),
            got: points.len(),
        });
    }
    if max_iter < 1 {
        return Err(Error::Config("max_iter must be >= 1".into()));
    }
    check_dims(points)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = seed_centroids(points, k, &mut rng);
    let (mut labels, inertia) = assign(points, &centroids);
    let mut history = vec![inertia];
    let mut iterations_run = 0;
    let mut converged = false;
    while iterations_run < max_iter {
        iterations_run += 1;
        update(points, &mut labels, &mut centroids);
        let (next, inertia) = assign(points, &centroids);
        history.push(inertia);
        if next == labels {
            converged = true;
            break;
        }
        labels = next;
    }
    if !converged {
        // Leave centroids consistent with the reported assignments.
        update(points, &mut labels, &mut centroids);
    }
    let inertia = points
        .iter()
        .zip(&labels)
        .map(|(p, &l)| squared_distance(p, &centroids[l]))
        .sum();
    Ok(KMeansModel {
        k,
        centroids,
        assignments: labels,
        inertia,
        inertia_history: history,
        iterations_run,
        converged,
        seed,
    })
}

/// Best of `restarts` fits with seeds `seed, seed + 1, ...` by inertia
/// (earliest seed wins ties).
pub fn kmeans_fit_best(
    points: &[Vec<f64>],
    k: usize,
    max_iter: usize,
    seed: u64,
    restarts: usize,
) -> Result<KMeansModel> {
    let mut best: Option<KMeansModel> = None;
    for r in 0..restarts.max(1) as u64 {
        let m = kmeans_fit(points, k, max_iter, seed.wrapping_add(r))?;
        if best.as_ref().is_none_or(|b| m.inertia < b.inertia) {
            best = Some(m);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Linear-interpolation quantile of `values` at `q` in [0, 1].
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Distance of every point to its nearest centroid.
pub fn centroid_distances(model: &KMeansModel, points: &[Vec<f64>]) -> Result<Vec<f64>> {
    let dim = model.dim();
    points
        .iter()
        .map(|p| {
            if p.len() != dim {
                Err(Error::DimMismatch {
                    expected: dim,
                    got: p.len(),
                })
            } else {
                Ok(model.nearest(p).1.sqrt())
            }
        })
        .collect()
}

fn check_quantile(q: f64) -> Result<()> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Config(format!(
            "flag quantile must lie in (0, 1), got {q}"
        )));
    }
    Ok(())
}

/// Flags points strictly farther from their centroid than the
/// `flag_quantile` quantile of all such distances.
pub fn kmeans_anomalies(
    model: &KMeansModel,
    points: &[Vec<f64>],
    flag_quantile: f64,
) -> Result<Vec<bool>> {
    check_quantile(flag_quantile)?;
    if points.is_empty() {
        return Ok(Vec::new());
    }
    let d = centroid_distances(model, points)?;
    let cut = quantile(&d, flag_quantile);
    Ok(d.iter().map(|&x| x > cut).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iter: usize,
    pub flag_quantile: f64,
    pub window: usize,
    pub restarts: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            k: 3,
            max_iter: 100,
            flag_quantile: 0.95,
            window: 24,
            restarts: 1,
        }
    }
}

/// K-means over the z-scored windows of one feature. Returns the windows and
/// an instance (window) result whose scores are centroid distances and whose
/// threshold is the flag quantile of those distances.
pub fn kmeans_detect(
    matrix: &FeatureMatrix,
    feature: &str,
    config: &KMeansConfig,
    seed: u64,
) -> Result<(Vec<Window>, DetectionResult)> {
    check_quantile(config.flag_quantile)?;
    let raw = matrix.column(feature)?;
    let (mean, std) = column_stats(&raw);
    let windows = windows_from_slice(feature, &normalize_slice(&raw, mean, std), config.window, 1)?;
    let points: Vec<Vec<f64>> = windows.iter().map(|w| w.values.clone()).collect();
    let model = kmeans_fit_best(&points, config.k, config.max_iter, seed, config.restarts)?;
    let d = centroid_distances(&model, &points)?;
    let cut = quantile(&d, config.flag_quantile);
    let n = windows.len();
    let result = DetectionResult::from_scores(
        DetectionUnit::Instance,
        (0..n).collect(),
        vec![None; n],
        d,
        cut,
        format!("kmeans-k{}-seed{seed}", config.k),
    )?;
    Ok((windows, result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, proptest};

    fn pts(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn two_blobs() {
        let m = kmeans_fit(&pts(&[0.0, 0.1, 10.0, 10.1]), 2, 50, 0).unwrap();
        let mut c: Vec<f64> = m.centroids.iter().map(|c| c[0]).collect();
        c.sort_by(f64::total_cmp);
        assert!((c[0] - 0.05).abs() < 1e-12 && (c[1] - 10.05).abs() < 1e-12);
        assert!(m.converged);
    }

    #[test]
    fn k_equals_n_has_zero_inertia() {
        let p = pts(&[3.0, -1.0, 7.5, 2.0, 2.5]);
        let m = kmeans_fit(&p, 5, 10, 3).unwrap();
        assert_eq!(m.inertia, 0.0);
        let mut a = m.assignments.clone();
        a.sort();
        a.dedup();
        assert_eq!(a.len(), 5);
    }

    #[test]
    fn k_one_is_global_mean() {
        let p = vec![vec![1.0, 2.0], vec![3.0, -4.0], vec![5.0, 0.5]];
        let m = kmeans_fit(&p, 1, 10, 0).unwrap();
        assert!((m.centroids[0][0] - 3.0).abs() < 1e-12);
        assert!((m.centroids[0][1] + 0.5).abs() < 1e-12);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            kmeans_fit(&pts(&[1.0]), 2, 10, 0),
            Err(Error::TooFewPoints { .. })
        ));
        let bad = vec![vec![1.0], vec![1.0, 2.0]];
        assert!(matches!(
            kmeans_fit(&bad, 1, 10, 0),
            Err(Error::DimMismatch { .. })
        ));
        let m = kmeans_fit(&pts(&[1.0, 2.0]), 1, 10, 0).unwrap();
        assert!(matches!(
            kmeans_anomalies(&m, &[vec![1.0, 2.0]], 0.9),
            Err(Error::DimMismatch { .. })
        ));
        assert!(kmeans_anomalies(&m, &pts(&[1.0]), 1.0).is_err());
    }

    #[test]
    fn duplicate_points_do_not_break_seeding() {
        let m = kmeans_fit(&pts(&[1.0, 1.0, 1.0, 1.0]), 3, 10, 0).unwrap();
        assert_eq!(m.inertia, 0.0);
    }

    #[test]
    fn equidistant_points_are_not_flagged() {
        let p = pts(&[-1.0, 1.0, -1.0, 1.0]);
        let m = kmeans_fit(&p, 1, 10, 0).unwrap();
        assert_eq!(kmeans_anomalies(&m, &p, 0.95).unwrap(), vec![false; 4]);
    }

    #[test]
    fn far_outlier_is_flagged() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut p: Vec<Vec<f64>> = (0..100)
            .map(|i| {
                let c = if i % 2 == 0 { 0.0 } else { 5.0 };
                vec![c + rng.gen_range(-0.5..0.5), c + rng.gen_range(-0.5..0.5)]
            })
            .collect();
        let m = kmeans_fit(&p, 2, 100, 0).unwrap();
        p.push(vec![40.0, -40.0]);
        let flags = kmeans_anomalies(&m, &p, 0.95).unwrap();
        assert!(flags[100]);
        // distance oracle: the outlier is the farthest point from its centroid
        let d = centroid_distances(&m, &p).unwrap();
        let arg = (0..d.len()).max_by(|&a, &b| d[a].total_cmp(&d[b])).unwrap();
        assert_eq!(arg, 100);
    }

    #[test]
    fn quantile_interpolates() {
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.5), 3.0);
        assert!((quantile(&[0.0, 10.0], 0.95) - 9.5).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn lloyd_invariants(
            raw in proptest::collection::vec((-10f64..10.0, -10f64..10.0), 4..40),
            k in 1usize..4,
            seed in 0u64..50,
        ) {
            let p: Vec<Vec<f64>> = raw.iter().map(|&(a, b)| vec![a, b]).collect();
            let m = kmeans_fit(&p, k, 100, seed).unwrap();
            for w in m.inertia_history.windows(2) {
                prop_assert!(w[1] <= w[0] + 1e-9 * (1.0 + w[0].abs()));
            }
            prop_assert!(m.assignments.iter().all(|&a| a < k));
            if m.converged {
                for c in 0..k {
                    let members: Vec<&Vec<f64>> = p.iter().zip(&m.assignments).filter(|(_, &a)| a == c).map(|(x, _)| x).collect();
                    prop_assert!(!members.is_empty());
                    for d in 0..2 {
                        let mean = members.iter().map(|x| x[d]).sum::<f64>() / members.len() as f64;
                        prop_assert!((mean - m.centroids[c][d]).abs() < 1e-9);
                    }
                }
            }
        }

        #[test]
        fn flag_count_monotone_in_quantile(
            raw in proptest::collection::vec(-10f64..10.0, 5..60),
            q1 in 0.01f64..0.99,
            dq in 0.0f64..0.5,
        ) {
            let p = pts(&raw);
            let m = kmeans_fit(&p, 2, 50, 0).unwrap();
            let q2 = (q1 + dq).min(0.999);
            let a = kmeans_anomalies(&m, &p, q1).unwrap().iter().filter(|&&f| f).count();
            let b = kmeans_anomalies(&m, &p, q2).unwrap().iter().filter(|&&f| f).count();
            prop_assert!(b <= a);
        }
    }
}
