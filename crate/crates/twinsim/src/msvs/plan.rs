//! Multicast grouping and the heuristic 3C plan: per-group bitrate and
//! bandwidth (communication), transcode jobs (computing), and prefetch depth
//! (buffer control).

use crate::error::{Result, SimError};
use crate::learners::kmeans_cluster;
use crate::msvs::qoe::QoeWeights;
use crate::physnet::{EdgeServer, UserId, VideoId};
use crate::rng::RandomStream;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MulticastGroup {
    pub id: usize,
    pub members: Vec<UserId>,
    /// Normalized watched-duration histogram of the members.
    pub swipe_distribution: Vec<f64>,
    pub bitrate_bps: f64,
    pub bandwidth_hz: f64,
    pub prefetch_depth: usize,
}

/// Cluster users into multicast groups by their latent behavior vectors.
/// Latents are indexed by user id; groups partition the user set.
pub fn regroup(latents: &[Vec<f64>], k: usize, rng: &mut RandomStream) -> Result<Vec<MulticastGroup>> {
    let n = latents.len();
    if k > n {
        return Err(SimError::KOutOfRange { k, n });
    }
    let clustering = kmeans_cluster(latents, k, rng)?;
    let mut groups: Vec<MulticastGroup> = (0..k)
        .map(|id| MulticastGroup {
            id,
            members: Vec::new(),
            swipe_distribution: Vec::new(),
            bitrate_bps: 0.0,
            bandwidth_hz: 0.0,
            prefetch_depth: 1,
        })
        .collect();
    for (user, &cluster) in clustering.assignment.iter().enumerate() {
        groups[cluster].members.push(user);
    }
    groups.retain(|g| !g.members.is_empty());
    for (id, g) in groups.iter_mut().enumerate() {
        g.id = id;
    }
    Ok(groups)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupPlan {
    pub group: usize,
    pub rung: usize,
    pub bitrate_bps: f64,
    pub bandwidth_hz: f64,
    /// Transcode job scheduled this slot, if the chosen rung is uncached.
    pub transcode_job: Option<(VideoId, usize)>,
    pub prefetch_depth: usize,
    /// No rung was sustainable under the group's share; lowest assigned.
    pub infeasible: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Plan3C {
    pub groups: Vec<GroupPlan>,
    pub total_bandwidth_hz: f64,
    pub transcode_cost: usize,
}

/// Planner-side score of serving a `size`-member group at `bitrate_bps`
/// when its worst member sustains `rate_bps`. Multicast segments are only
/// playable when fully received within the slot, so an unsustainable rung
/// yields stall time instead of partial utility.
pub fn estimated_group_score(
    size: usize,
    bitrate_bps: f64,
    rate_bps: f64,
    weights: &QoeWeights,
    slot_duration: f64,
    bitrate_min_bps: f64,
) -> f64 {
    let per_user = if rate_bps >= bitrate_bps {
        weights.alpha * (1.0 + bitrate_bps / bitrate_min_bps).ln()
    } else {
        -weights.beta * slot_duration * (1.0 - (rate_bps / bitrate_bps).min(1.0))
    };
    size as f64 * per_user
}

/// Smallest prefetch depth whose binomial video-advance count over the
/// planning horizon is covered with probability >= 0.9.
pub fn prefetch_depth(
    swipe_distribution: &[f64],
    bin_edges: &[f64],
    slot_duration: f64,
    horizon_slots: u64,
    max_depth: usize,
) -> usize {
    if swipe_distribution.len() + 1 != bin_edges.len() {
        return 1;
    }
    let mean_watch: f64 = swipe_distribution
        .iter()
        .enumerate()
        .map(|(i, &p)| p * 0.5 * (bin_edges[i] + bin_edges[i + 1]))
        .sum();
    if mean_watch <= 0.0 {
        return max_depth.max(1);
    }
    let p = (slot_duration / mean_watch).min(1.0);
    let t = horizon_slots as usize;
    if p >= 1.0 - 1e-12 {
        return t.clamp(1, max_depth);
    }
    // Binomial CDF of advances over t slots.
    let mut pmf = (1.0 - p).powi(t as i32);
    let mut cdf = pmf;
    let mut d = 0usize;
    while cdf < 0.9 && d < t {
        pmf *= (t - d) as f64 / (d + 1) as f64 * p / (1.0 - p);
        cdf += pmf;
        d += 1;
    }
    d.clamp(1, max_depth)
}

/// Joint communication / computing / buffer plan for one slot.
///
/// Bandwidth splits proportionally to group size; each group gets the
/// highest ladder rung its worst member sustains under its share, then one
/// water-filling pass donates all slack to the group whose score gains most
/// from it. Transcode jobs cover uncached chosen rungs (rung 0 is the
/// ingest representation, always available) and are truncated to edge
/// capacity by group size descending; truncated groups fall back to the
/// best cached rung.
#[allow(clippy::too_many_arguments)]
pub fn plan_3c(
    groups: &[MulticastGroup],
    user_spectral_efficiency: &[f64],
    quota_hz: f64,
    ladder: &[f64],
    edge: &EdgeServer,
    group_videos: &[VideoId],
    weights: &QoeWeights,
    slot_duration: f64,
    bin_edges: &[f64],
    prefetch_horizon_slots: u64,
    max_prefetch_depth: usize,
) -> Result<Plan3C> {
    if groups.is_empty() {
        return Err(SimError::InvalidConfig("plan_3c needs at least one group".into()));
    }
    if !(quota_hz > 0.0) {
        return Err(SimError::InvalidConfig("plan quota must be > 0".into()));
    }
    debug_assert_eq!(groups.len(), group_videos.len());
    let total_members: usize = groups.iter().map(|g| g.members.len()).sum();
    let bitrate_min = ladder[0];

    let worst_se: Vec<f64> = groups
        .iter()
        .map(|g| {
            g.members
                .iter()
                .map(|&u| user_spectral_efficiency[u])
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mut shares: Vec<f64> = groups
        .iter()
        .map(|g| quota_hz * g.members.len() as f64 / total_members as f64)
        .collect();

    let best_rung = |se: f64, share: f64| -> Option<usize> {
        (0..ladder.len()).rev().find(|&r| ladder[r] <= se * share)
    };
    let mut rungs: Vec<usize> = Vec::with_capacity(groups.len());
    let mut infeasible: Vec<bool> = Vec::with_capacity(groups.len());
    for (g, &se) in worst_se.iter().enumerate() {
        match best_rung(se, shares[g]) {
            Some(r) => {
                rungs.push(r);
                infeasible.push(false);
            }
            None => {
                rungs.push(0);
                infeasible.push(true);
            }
        }
    }

    // Water-filling pass: needed bandwidth per group at its rung, slack
    // donated wholesale to the group with the largest score gain.
    let needed: Vec<f64> = (0..groups.len())
        .map(|g| {
            if infeasible[g] {
                shares[g]
            } else {
                ladder[rungs[g]] / worst_se[g]
            }
        })
        .collect();
    let total_needed: f64 = needed.iter().sum();
    let score_at = |g: usize, rung: usize, share: f64| -> f64 {
        estimated_group_score(
            groups[g].members.len(),
            ladder[rung],
            worst_se[g] * share,
            weights,
            slot_duration,
            bitrate_min,
        )
    };
    let mut best: Option<(usize, usize, f64)> = None;
    for g in 0..groups.len() {
        let reachable = quota_hz - (total_needed - needed[g]);
        if let Some(r) = best_rung(worst_se[g], reachable) {
            let gain = score_at(g, r, reachable) - score_at(g, rungs[g], shares[g]);
            if gain > 1e-12 && best.map_or(true, |(_, _, bg)| gain > bg) {
                best = Some((g, r, gain));
            }
        }
    }
    if let Some((g, r, _)) = best {
        for h in 0..groups.len() {
            shares[h] = needed[h];
        }
        shares[g] = quota_hz - (total_needed - needed[g]);
        rungs[g] = r;
        infeasible[g] = false;
    }

    Ok(finalize_plan(
        groups,
        rungs,
        shares,
        infeasible,
        ladder,
        edge,
        group_videos,
        slot_duration,
        bin_edges,
        prefetch_horizon_slots,
        max_prefetch_depth,
    ))
}

/// Computing and buffer-control stages shared by the heuristic planner and
/// the learned baseline: schedule transcode jobs within edge capacity and
/// derive prefetch depths from the group swipe distributions.
#[allow(clippy::too_many_arguments)]
pub fn finalize_plan(
    groups: &[MulticastGroup],
    mut rungs: Vec<usize>,
    shares: Vec<f64>,
    infeasible: Vec<bool>,
    ladder: &[f64],
    edge: &EdgeServer,
    group_videos: &[VideoId],
    slot_duration: f64,
    bin_edges: &[f64],
    prefetch_horizon_slots: u64,
    max_prefetch_depth: usize,
) -> Plan3C {
    // Transcode jobs for uncached nonzero rungs, largest groups first (ties
    // by lower group id), truncated to edge capacity.
    let mut wants_job: Vec<usize> = (0..groups.len())
        .filter(|&g| rungs[g] > 0 && !edge.is_cached(group_videos[g], rungs[g]))
        .collect();
    wants_job.sort_by_key(|&g| (std::cmp::Reverse(groups[g].members.len()), g));
    let mut jobs: Vec<Option<(VideoId, usize)>> = vec![None; groups.len()];
    for (i, &g) in wants_job.iter().enumerate() {
        if i < edge.compute_capacity {
            jobs[g] = Some((group_videos[g], rungs[g]));
        } else {
            rungs[g] = (0..rungs[g])
                .rev()
                .find(|&r| r == 0 || edge.is_cached(group_videos[g], r))
                .unwrap_or(0);
        }
    }

    let plans: Vec<GroupPlan> = (0..groups.len())
        .map(|g| GroupPlan {
            group: groups[g].id,
            rung: rungs[g],
            bitrate_bps: ladder[rungs[g]],
            bandwidth_hz: shares[g],
            transcode_job: jobs[g],
            prefetch_depth: prefetch_depth(
                &groups[g].swipe_distribution,
                bin_edges,
                slot_duration,
                prefetch_horizon_slots,
                max_prefetch_depth,
            ),
            infeasible: infeasible[g],
        })
        .collect();
    let transcode_cost = plans.iter().filter(|p| p.transcode_job.is_some()).count();
    Plan3C {
        total_bandwidth_hz: plans.iter().map(|p| p.bandwidth_hz).sum(),
        groups: plans,
        transcode_cost,
    }
}
