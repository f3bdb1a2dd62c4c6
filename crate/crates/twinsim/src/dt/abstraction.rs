//! Feature abstraction: encode user behavior windows to latent space, pick a
//! cluster count with the double-Q agent, cluster with k-means++, and feed
//! soft-assignment entropies back as the unlabeled error signal.

use crate::dt::detector::unlabeled_error;
use crate::error::{Result, SimError};
use crate::learners::{kmeans_cluster, Clustering, QAgent};
use crate::rng::RandomStream;
use serde::{Deserialize, Serialize};

/// Softmax over negative distances to the centroids at temperature `tau`.
pub fn soft_assignment(latent: &[f64], centroids: &[Vec<f64>], tau: f64) -> Vec<f64> {
    let tau = tau.max(1e-12);
    let logits: Vec<f64> = centroids
        .iter()
        .map(|c| {
            let d2: f64 = latent.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
            -d2.sqrt() / tau
        })
        .collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Median pairwise distance between latents; the scale-free softmax
/// temperature.
pub fn median_pairwise_distance(latents: &[Vec<f64>]) -> f64 {
    let n = latents.len();
    if n < 2 {
        return 1.0;
    }
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let d2: f64 = latents[i]
                .iter()
                .zip(&latents[j])
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            dists.push(d2.sqrt());
        }
    }
    dists.sort_by(|a, b| a.partial_cmp(b).unwrap());
    dists[dists.len() / 2]
}

/// Discretized latent summary: quantized mean pairwise distance x quantized
/// latent variance on an 8x8 grid.
pub fn latent_state(latents: &[Vec<f64>]) -> usize {
    let n = latents.len();
    let dim = latents.first().map(|l| l.len()).unwrap_or(0);
    let mean_dist = if n < 2 {
        0.0
    } else {
        let mut total = 0.0;
        let mut count = 0usize;
        for i in 0..n {
            for j in i + 1..n {
                let d2: f64 = latents[i]
                    .iter()
                    .zip(&latents[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                total += d2.sqrt();
                count += 1;
            }
        }
        total / count as f64
    };
    let mut variance = 0.0;
    if n > 0 && dim > 0 {
        for j in 0..dim {
            let mean = latents.iter().map(|l| l[j]).sum::<f64>() / n as f64;
            variance += latents.iter().map(|l| (l[j] - mean).powi(2)).sum::<f64>() / n as f64;
        }
    }
    // Logarithmic bins keep the grid usable across latent scales.
    let bucket = |x: f64| -> usize {
        if x <= 0.0 {
            return 0;
        }
        ((x.log10() + 4.0).floor().clamp(0.0, 7.0)) as usize
    };
    bucket(mean_dist) * 8 + bucket(variance)
}

pub const LATENT_STATES: usize = 64;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AbstractionOutcome {
    pub clustering: Clustering,
    pub k: usize,
    /// Discretized latent state the agent acted on.
    pub state: usize,
    pub action: usize,
    /// Per-user soft-assignment entropy (nats).
    pub entropies: Vec<f64>,
    /// Softmax temperature used for the entropies.
    pub tau: f64,
    /// Cohesion-based reward component for the agent (before the -lambda*k
    /// grouping cost).
    pub cohesion: f64,
}

/// Epsilon-greedy cluster count in [k_min, k_max] from the agent.
pub fn select_cluster_count(
    agent: &QAgent,
    state: usize,
    k_min: usize,
    k_max: usize,
    rng: &mut RandomStream,
) -> usize {
    debug_assert_eq!(agent.n_actions, k_max - k_min + 1);
    k_min + agent.select_action(state, rng)
}

/// Cluster the latents with the agent-chosen k and compute soft-assignment
/// entropies. `n < k_min` collapses to a single cluster.
pub fn abstract_features(
    latents: &[Vec<f64>],
    agent: &QAgent,
    k_min: usize,
    k_max: usize,
    rng: &mut RandomStream,
) -> Result<AbstractionOutcome> {
    let n = latents.len();
    if n == 0 {
        return Err(SimError::KOutOfRange { k: k_min, n });
    }
    let state = latent_state(latents);
    let k_cap = k_max.min(n);
    let k = select_cluster_count(agent, state, k_min, k_max, rng).min(k_cap);
    let clustering = kmeans_cluster(latents, k, rng)?;
    let tau = median_pairwise_distance(latents);
    let entropies: Vec<f64> = latents
        .iter()
        .map(|l| {
            let probs = soft_assignment(l, &clustering.centroids, tau);
            unlabeled_error(&probs).unwrap_or(0.0)
        })
        .collect();
    let cohesion = cohesion_score(latents, &clustering);
    let action = k - k_min;
    Ok(AbstractionOutcome {
        clustering,
        k,
        state,
        action,
        entropies,
        tau,
        cohesion,
    })
}

/// Simplified silhouette over centroid distances: mean of (b - a) /
/// max(a, b) where a is the distance to the own centroid and b to the
/// nearest other centroid. Zero for k = 1.
pub fn cohesion_score(latents: &[Vec<f64>], clustering: &Clustering) -> f64 {
    let k = clustering.centroids.len();
    if k < 2 {
        return 0.0;
    }
    let dist = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    let mut total = 0.0;
    for (l, &own) in latents.iter().zip(&clustering.assignment) {
        let a = dist(l, &clustering.centroids[own]);
        let b = clustering
            .centroids
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != own)
            .map(|(_, c)| dist(l, c))
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    total / latents.len() as f64
}

/// Normalized histogram of watched durations over `bins` (edges strictly
/// increasing, one bucket between consecutive edges). Empty input yields the
/// uniform prior.
pub fn swipe_distribution(durations: &[f64], bins: &[f64]) -> Result<Vec<f64>> {
    if bins.len() < 2 || bins.windows(2).any(|w| w[0] >= w[1]) {
        return Err(SimError::BadBins);
    }
    let buckets = bins.len() - 1;
    if durations.is_empty() {
        return Ok(vec![1.0 / buckets as f64; buckets]);
    }
    let mut hist = vec![0.0; buckets];
    for &d in durations {
        let mut idx = buckets - 1;
        for b in 0..buckets {
            if d < bins[b + 1] {
                idx = b;
                break;
            }
        }
        hist[idx] += 1.0;
    }
    let total: f64 = hist.iter().sum();
    Ok(hist.into_iter().map(|h| h / total).collect())
}
