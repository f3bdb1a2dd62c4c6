//! K-means++ seeding and Lloyd clustering.
//!
//! Tie-breaks are deterministic: nearest-centroid ties resolve to the lowest
//! centroid index, and an empty cluster is re-seeded at the point farthest
//! from its assigned centroid.

use crate::error::{Result, SimError};
use crate::rng::RandomStream;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Clustering {
    pub centroids: Vec<Vec<f64>>,
    /// Index into `centroids` for every input point.
    pub assignment: Vec<usize>,
    /// Within-cluster sum of squares.
    pub wcss: f64,
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = dist_sq(point, c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    (best, best_d)
}

/// K-means++ seeding: first centroid uniform, each next centroid drawn with
/// probability proportional to squared distance to the nearest chosen one.
pub fn kmeanspp_seed(
    points: &[Vec<f64>],
    k: usize,
    rng: &mut RandomStream,
) -> Result<Vec<Vec<f64>>> {
    let n = points.len();
    if k == 0 || k > n {
        return Err(SimError::KOutOfRange { k, n });
    }
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.gen_range(0..n)].clone());
    let mut d2: Vec<f64> = points.iter().map(|p| dist_sq(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total <= 0.0 {
            // All remaining mass is zero (coincident points); fall back to
            // the first point not already chosen exactly.
            (0..n).find(|i| d2[*i] > 0.0).unwrap_or(rng.gen_range(0..n))
        } else {
            let mut target = rng.gen::<f64>() * total;
            let mut chosen = n - 1;
            for (i, w) in d2.iter().enumerate() {
                if target < *w {
                    chosen = i;
                    break;
                }
                target -= w;
            }
            chosen
        };
        let c = points[idx].clone();
        for (i, p) in points.iter().enumerate() {
            let d = dist_sq(p, &c);
            if d < d2[i] {
                d2[i] = d;
            }
        }
        centroids.push(c);
    }
    Ok(centroids)
}

/// Lloyd iterations from a k-means++ seed until the assignment reaches a
/// fixpoint or 100 iterations. WCSS is non-increasing per iteration.
pub fn kmeans_cluster(
    points: &[Vec<f64>],
    k: usize,
    rng: &mut RandomStream,
) -> Result<Clustering> {
    let n = points.len();
    let mut centroids = kmeanspp_seed(points, k, rng)?;
    let dim = points[0].len();
    let mut assignment = vec![0usize; n];
    for _ in 0..100 {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let (a, _) = nearest(p, &centroids);
            if assignment[i] != a {
                assignment[i] = a;
                changed = true;
            }
        }
        // Recompute means; re-seed any empty cluster at the point farthest
        // from its assigned centroid.
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (i, p) in points.iter().enumerate() {
            counts[assignment[i]] += 1;
            for (s, v) in sums[assignment[i]].iter_mut().zip(p) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                for (j, s) in sums[c].iter().enumerate() {
                    centroids[c][j] = s / counts[c] as f64;
                }
            } else {
                let far = (0..n)
                    .max_by(|&a, &b| {
                        let da = dist_sq(&points[a], &centroids[assignment[a]]);
                        let db = dist_sq(&points[b], &centroids[assignment[b]]);
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap();
                centroids[c] = points[far].clone();
                assignment[far] = c;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    // Final assignment pass so every point sits at its nearest centroid.
    for (i, p) in points.iter().enumerate() {
        assignment[i] = nearest(p, &centroids).0;
    }
    let wcss = points
        .iter()
        .zip(&assignment)
        .map(|(p, &a)| dist_sq(p, &centroids[a]))
        .sum();
    Ok(Clustering {
        centroids,
        assignment,
        wcss,
    })
}

/// Adjusted Rand index between two labelings. Used as the planted-partition
/// oracle metric in tests and acceptance checks.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let ka = a.iter().max().map(|m| m + 1).unwrap_or(0);
    let kb = b.iter().max().map(|m| m + 1).unwrap_or(0);
    let mut table = vec![vec![0u64; kb]; ka];
    for i in 0..n {
        table[a[i]][b[i]] += 1;
    }
    let choose2 = |x: u64| (x * x.saturating_sub(1)) as f64 / 2.0;
    let sum_ij: f64 = table.iter().flatten().map(|&x| choose2(x)).sum();
    let sum_a: f64 = table.iter().map(|row| choose2(row.iter().sum())).sum();
    let sum_b: f64 = (0..kb)
        .map(|j| choose2(table.iter().map(|row| row[j]).sum()))
        .sum();
    let total = choose2(n as u64);
    let expected = sum_a * sum_b / total;
    let max = (sum_a + sum_b) / 2.0;
    if (max - expected).abs() < 1e-12 {
        return 1.0;
    }
    (sum_ij - expected) / (max - expected)
}
