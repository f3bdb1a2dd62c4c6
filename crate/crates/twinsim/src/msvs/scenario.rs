//! The multicast short-video streaming case study: a ground-truth world of
//! swiping users behind a twin layer that groups them, plans 3C resources,
//! and reacts to behavior drift.

use crate::dt::{
    abstract_features, swipe_distribution, validate_policy, InfrastructureDigitalTwin,
    SliceDigitalTwin, TaskClass, Tier, TierSelector, UdtConfig, UserDigitalTwin, IDT_STATES,
    LATENT_STATES, QUOTA_ACTIONS, SDT_STATES, SPLIT_ACTIONS,
};
use crate::error::{Result, SimError};
use crate::learners::{Autoencoder, AutoencoderHyper, PredictorHyper, QAgent};
use crate::msvs::plan::{finalize_plan, plan_3c, GroupPlan, MulticastGroup};
use crate::msvs::qoe::{qoe_slot, QoeComponents, QoeWeights};
use crate::msvs::snapshot::{replay_policy, ReplayPolicy, SnapshotGroup, TwinSnapshot};
use crate::physnet::{
    achievable_rate_bps, generate_catalog, inject_drift, multicast_deliver, path_loss_db,
    sample_swipe, snr_linear, step_mobility, Arena, BaseStation, DriftSpec, EdgeServer,
    PathLossParams, Position, PreferenceRemap, SwipeParams, User, Video,
};
use crate::rng::{labels, rng_stream, RandomStream};
use crate::sim::{run_with_model, MetricsRow, Phase, SimConfig, SimReport, SlotEvent, SlotModel};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Adaptive twin inference and dual-error updates with heuristic 3C.
    Proposed,
    /// Fixed twin inference version and update frequency, same 3C.
    FixedDt,
    /// Same adaptive twin layer, 3C from a two-level tabular Q hierarchy.
    HierDrl,
}

impl std::str::FromStr for Scheme {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "proposed" => Ok(Scheme::Proposed),
            "fixed-dt" => Ok(Scheme::FixedDt),
            "hier-drl" => Ok(Scheme::HierDrl),
            other => Err(SimError::InvalidConfig(format!("unknown scheme: {other}"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Scheme::Proposed => "proposed",
            Scheme::FixedDt => "fixed-dt",
            Scheme::HierDrl => "hier-drl",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub users: usize,
    pub stations: usize,
    pub categories: usize,
    pub catalog_size: usize,
    pub total_bandwidth_hz: f64,
    pub tx_power_dbm: f64,
    pub arena: Arena,
    pub path_loss: PathLossParams,
    pub swipe: SwipeParams,
    pub drifts: Vec<DriftSpec>,
    pub scheme: Scheme,
    pub qoe: QoeWeights,
    pub bitrate_ladder: Vec<f64>,
    pub edge_capacity: usize,
    pub udt: UdtConfig,
    pub predictor: PredictorHyper,
    /// Slot at which twin models are first trained and real grouping starts.
    pub warmup_slots: u64,
    pub k_min: usize,
    pub k_max: usize,
    pub latent_dim: usize,
    /// Behavior window (records) feeding the autoencoder features.
    pub behavior_window: usize,
    /// Fixed-dt scheme: model update every this many slots.
    pub fixed_update_period: u64,
    /// Station bandwidth split reconsidered every this many slots.
    pub operate_period: u64,
    pub prefetch_horizon_slots: u64,
    pub max_prefetch_depth: usize,
    /// Probability that a next video is drawn from a uniform category
    /// instead of the group's serving category.
    pub explore_category_prob: f64,
    /// Watching this fraction of a video counts as full engagement.
    pub engagement_norm_fraction: f64,
    pub validation_horizon: u64,
    /// Minimum slots between heavy regroupings, for group stability.
    pub regroup_cooldown_slots: u64,
    /// Grouping cost weight in the cluster-count agent's reward.
    pub lambda_k: f64,
    /// Prefetch stock cap, seconds per unit of prefetch depth.
    pub stock_cap_s: f64,
    /// Watched-duration histogram bin edges, seconds.
    pub duration_bins: Vec<f64>,
    /// Background slice demand as a share of total bandwidth.
    pub background_share: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            users: 100,
            stations: 2,
            categories: 4,
            catalog_size: 48,
            total_bandwidth_hz: 1.0e6,
            tx_power_dbm: 30.0,
            arena: Arena {
                width_m: 300.0,
                height_m: 300.0,
                v_min: 0.0,
                v_max: 3.0,
            },
            path_loss: PathLossParams {
                shadow_sigma_db: 2.0,
                ..Default::default()
            },
            swipe: SwipeParams::default(),
            drifts: vec![
                DriftSpec {
                    slot: 20,
                    fraction: 0.6,
                    remap: PreferenceRemap::Reverse,
                },
                DriftSpec {
                    slot: 90,
                    fraction: 0.6,
                    remap: PreferenceRemap::Rotate,
                },
            ],
            scheme: Scheme::Proposed,
            qoe: QoeWeights::default(),
            bitrate_ladder: vec![0.25e6, 0.5e6, 1.0e6, 2.0e6, 4.0e6],
            edge_capacity: 6,
            udt: UdtConfig {
                theta_labeled: 0.08,
                theta_unlabeled: 5.0 * 5f64.ln(),
                engagement_step: 0.4,
                p_min: 2,
                p_max: 16,
                period_theta_hi: 0.05,
                period_theta_lo: 0.005,
                ..Default::default()
            },
            predictor: PredictorHyper {
                hidden_dim: 8,
                window: 6,
                learning_rate: 0.05,
                epochs: 300,
                incremental_epochs: 10,
            },
            warmup_slots: 12,
            k_min: 2,
            k_max: 5,
            latent_dim: 3,
            behavior_window: 6,
            fixed_update_period: 40,
            operate_period: 10,
            prefetch_horizon_slots: 10,
            max_prefetch_depth: 6,
            explore_category_prob: 0.2,
            engagement_norm_fraction: 0.25,
            validation_horizon: 5,
            regroup_cooldown_slots: 4,
            lambda_k: 0.005,
            stock_cap_s: 20.0,
            duration_bins: vec![0.0, 5.0, 15.0, 30.0, 60.0],
            background_share: 0.4,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |key: &str, msg: &str| {
            Err(SimError::Validation {
                key: key.to_string(),
                msg: msg.to_string(),
            })
        };
        if !(self.total_bandwidth_hz > 0.0) {
            return fail("scenario.total_bandwidth_hz", "must be > 0");
        }
        if self.stations == 0 {
            return fail("scenario.stations", "must be >= 1");
        }
        if self.categories < 2 {
            return fail("scenario.categories", "must be >= 2");
        }
        if self.catalog_size == 0 {
            return fail("scenario.catalog_size", "must be >= 1");
        }
        if self.bitrate_ladder.is_empty()
            || self.bitrate_ladder.windows(2).any(|w| w[0] >= w[1])
            || self.bitrate_ladder[0] <= 0.0
        {
            return fail("scenario.bitrate_ladder", "must be strictly increasing and positive");
        }
        if !self.qoe.validate() {
            return fail("scenario.qoe", "weights must be >= 0");
        }
        if self.k_min < 1 || self.k_max < self.k_min {
            return fail("scenario.k_min", "need 1 <= k_min <= k_max");
        }
        if self.latent_dim == 0 || self.latent_dim >= self.categories + 1 {
            return fail("scenario.latent_dim", "must be in [1, categories]");
        }
        if !(0.0..=1.0).contains(&self.explore_category_prob) {
            return fail("scenario.explore_category_prob", "must be in [0, 1]");
        }
        if !(self.engagement_norm_fraction > 0.0 && self.engagement_norm_fraction <= 1.0) {
            return fail("scenario.engagement_norm_fraction", "must be in (0, 1]");
        }
        for (i, d) in self.drifts.iter().enumerate() {
            if !(d.fraction > 0.0 && d.fraction <= 1.0) {
                return fail(&format!("scenario.drifts[{i}].fraction"), "must be in (0, 1]");
            }
        }
        if self.duration_bins.len() < 2 || self.duration_bins.windows(2).any(|w| w[0] >= w[1]) {
            return fail("scenario.duration_bins", "edges must be strictly increasing");
        }
        if !(0.0..1.0).contains(&self.background_share) {
            return fail("scenario.background_share", "must be in [0, 1)");
        }
        if self.fixed_update_period == 0 || self.operate_period == 0 {
            return fail("scenario.fixed_update_period", "periods must be >= 1");
        }
        Ok(())
    }
}

/// Two-level learned 3C baseline: the top agent picks a bandwidth split
/// pattern over groups, the bottom agent a ladder rung per group.
struct HierPolicy {
    top: QAgent,
    bottom: QAgent,
    pending_top: Option<(usize, usize)>,
    pending_bottom: Vec<(usize, usize)>,
}

const HIER_PATTERNS: usize = 3;
const HIER_RATE_STATES: usize = 8;

impl HierPolicy {
    fn new(n_rungs: usize) -> Self {
        Self {
            top: QAgent::new(IDT_STATES, HIER_PATTERNS, 0.3, 0.2, 0.9),
            bottom: QAgent::new(HIER_RATE_STATES, n_rungs, 0.3, 0.2, 0.9),
            pending_top: None,
            pending_bottom: Vec::new(),
        }
    }

    fn set_epsilon(&mut self, slot: u64) {
        let eps = (0.3 * 0.99f64.powi(slot as i32)).max(0.05);
        self.top.epsilon = eps;
        self.bottom.epsilon = eps;
    }

    fn rate_state(rate_bps: f64, bitrate_min: f64) -> usize {
        if rate_bps <= 0.0 {
            return 0;
        }
        let x = (rate_bps / bitrate_min).log2();
        (x.max(0.0) as usize).min(HIER_RATE_STATES - 1)
    }
}

pub struct MsvsScenario {
    cfg: ScenarioConfig,
    slot_duration: f64,
    slicing_period: u64,

    rng_mobility: RandomStream,
    rng_swipe: RandomStream,
    rng_channel: RandomStream,
    rng_learner: RandomStream,
    rng_agent: RandomStream,
    rng_drift: RandomStream,

    stations: Vec<BaseStation>,
    users: Vec<User>,
    catalog: Vec<Video>,
    edge: EdgeServer,
    /// Prefetched seconds of upcoming videos, per user.
    stock: Vec<f64>,
    /// Abandons and elapsed slots since each user's last collection; their
    /// ratio is the behavior component of the status vector.
    abandons_since: Vec<f64>,
    slots_since: Vec<f64>,
    /// Smoothed per-user abandon rate; high values boost category
    /// exploration so shifted tastes are re-probed quickly.
    abandon_ema: Vec<f64>,
    /// Slot+1 when each category was last picked for each user.
    category_last_pick: Vec<Vec<u64>>,
    user_snr: Vec<f64>,
    user_se: Vec<f64>,
    /// Swipes observed since each user's last collection.
    swipes_pending: Vec<Vec<(usize, f64)>>,
    recent_durations: Vec<VecDeque<f64>>,

    twins: Vec<UserDigitalTwin>,
    autoencoder: Option<Autoencoder>,
    k_agent: QAgent,
    k_pending: Option<(usize, usize, f64)>,
    idt: InfrastructureDigitalTwin,
    sdt: SliceDigitalTwin,
    tier: TierSelector,

    groups: Vec<MulticastGroup>,
    group_of: Vec<usize>,
    serving_category: Vec<usize>,
    centroids: Vec<Vec<f64>>,
    models_ready: bool,
    regroup_due: bool,
    last_regroup_slot: u64,
    pending_entropies: Vec<Option<f64>>,
    max_trigger_level: f64,
    paused: bool,

    station_split: f64,
    split_pending: Option<(usize, usize)>,
    operate_qoe: (f64, u64),
    slice_pending: Option<(usize, usize)>,
    plan: Vec<GroupPlan>,
    hier: Option<HierPolicy>,
    last_mean_qoe: f64,

    slot_qoe: Vec<f64>,
    prev_bitrate: Vec<f64>,
    /// Per-slot, per-user logged QoE components.
    pub components: Vec<Vec<QoeComponents>>,
    metrics: MetricsRow,
}

impl MsvsScenario {
    pub fn new(sim: &SimConfig, cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let seed = sim.seed;
        let mut rng_mobility = rng_stream(seed, labels::MOBILITY);
        let mut rng_catalog = rng_stream(seed, labels::CATALOG);
        let n = cfg.users;
        let c = cfg.categories;

        let stations: Vec<BaseStation> = (0..cfg.stations)
            .map(|id| BaseStation {
                id,
                position: Position {
                    x: cfg.arena.width_m * (id as f64 + 0.5) / cfg.stations as f64,
                    y: cfg.arena.height_m / 2.0,
                },
                bandwidth_hz: cfg.total_bandwidth_hz / cfg.stations as f64,
                tx_power_dbm: cfg.tx_power_dbm,
                attached_users: Vec::new(),
            })
            .collect();
        let catalog = generate_catalog(cfg.catalog_size, c, &mut rng_catalog);

        // Concentrated preferences: each user favors one category.
        let mut users: Vec<User> = (0..n)
            .map(|u| {
                let dominant = u % c;
                let mut pref = vec![0.15 / (c as f64 - 1.0); c];
                pref[dominant] = 0.85;
                User::new(u, &cfg.arena, c, pref, &mut rng_mobility)
            })
            .collect();
        for user in &mut users {
            let dominant = user.id % c;
            let candidates: Vec<usize> = catalog
                .iter()
                .filter(|v| v.category == dominant)
                .map(|v| v.id)
                .collect();
            let pick = candidates
                .get(rng_catalog.gen_range(0..candidates.len().max(1)))
                .copied()
                .unwrap_or(0);
            user.current_video = pick;
        }

        let mut twins: Vec<UserDigitalTwin> = (0..n)
            .map(|u| UserDigitalTwin::new(u, c, cfg.udt))
            .collect();
        // Staggered collection offsets so reports spread across slots.
        for (u, twin) in twins.iter_mut().enumerate() {
            let _ = u;
            twin.collection_period = cfg.udt.initial_period;
        }

        let k_actions = cfg.k_max - cfg.k_min + 1;
        let k_agent = QAgent::new(LATENT_STATES, k_actions, 0.2, 0.2, 0.9);
        let idt_agent = QAgent::new(IDT_STATES, SPLIT_ACTIONS.len(), 0.2, 0.2, 0.9);
        let idt = InfrastructureDigitalTwin::new(
            &stations
                .iter()
                .map(|s| (s.id, s.bandwidth_hz))
                .collect::<Vec<_>>(),
            16,
            idt_agent,
        );
        let sdt_agent = QAgent::new(SDT_STATES, QUOTA_ACTIONS.len(), 0.2, 0.2, 0.9);
        let sdt = SliceDigitalTwin::new(cfg.total_bandwidth_hz, 0.5, sdt_agent);
        // Trigger levels are threshold-normalized ratios, so > 1 means a
        // detector fired and heavy regrouping is warranted.
        let mut tier = TierSelector::default();
        tier.feature_abstraction.error_threshold = 0.99;

        let hier = match cfg.scheme {
            Scheme::HierDrl => Some(HierPolicy::new(cfg.bitrate_ladder.len())),
            _ => None,
        };

        Ok(Self {
            slot_duration: sim.slot_duration,
            slicing_period: sim.slicing_period,
            rng_mobility,
            rng_swipe: rng_stream(seed, labels::SWIPE),
            rng_channel: rng_stream(seed, labels::CHANNEL),
            rng_learner: rng_stream(seed, labels::LEARNER_INIT),
            rng_agent: rng_stream(seed, labels::AGENT_EXPLORE),
            rng_drift: rng_stream(seed, labels::DRIFT),
            stations,
            users,
            catalog,
            edge: EdgeServer {
                compute_capacity: cfg.edge_capacity,
                bitrate_ladder: cfg.bitrate_ladder.clone(),
                cache: Vec::new(),
            },
            stock: vec![0.0; n],
            abandons_since: vec![0.0; n],
            slots_since: vec![0.0; n],
            abandon_ema: vec![0.0; n],
            category_last_pick: vec![vec![0; c]; n],
            user_snr: vec![0.0; n],
            user_se: vec![0.0; n],
            swipes_pending: vec![Vec::new(); n],
            recent_durations: vec![VecDeque::new(); n],
            twins,
            autoencoder: None,
            k_agent,
            k_pending: None,
            idt,
            sdt,
            tier,
            groups: Vec::new(),
            group_of: vec![0; n],
            serving_category: Vec::new(),
            centroids: Vec::new(),
            models_ready: false,
            regroup_due: false,
            last_regroup_slot: 0,
            pending_entropies: vec![None; n],
            max_trigger_level: 0.0,
            paused: false,
            station_split: 0.5,
            split_pending: None,
            operate_qoe: (0.0, 0),
            slice_pending: None,
            plan: Vec::new(),
            hier,
            last_mean_qoe: 0.0,
            slot_qoe: vec![0.0; n],
            prev_bitrate: vec![0.0; n],
            components: Vec::new(),
            cfg: cfg.clone(),
            metrics: MetricsRow::default(),
        })
    }

    fn status_vector(&self, u: usize) -> Vec<f64> {
        let user = &self.users[u];
        vec![
            user.position.x / self.cfg.arena.width_m,
            user.position.y / self.cfg.arena.height_m,
            (user.channel_gain_db + 130.0) / 100.0,
            self.abandons_since[u] / self.slots_since[u].max(1.0),
        ]
    }

    fn station_weights(&self) -> Vec<f64> {
        let n = self.stations.len();
        if n == 1 {
            return vec![1.0];
        }
        let mut w = vec![(1.0 - self.station_split) / (n as f64 - 1.0); n];
        w[0] = self.station_split;
        w
    }

    fn behavior_latent(&self, u: usize) -> Vec<f64> {
        let features = self.twins[u]
            .behavior_features(self.cfg.behavior_window)
            .unwrap_or_else(|| vec![0.0; self.cfg.categories + 1]);
        match &self.autoencoder {
            Some(ae) => ae.encode(&features).unwrap_or(features),
            None => features,
        }
    }

    /// Serving category for a group: argmax of the members' mean preference
    /// estimate, with the share of mass that category captures.
    fn group_serving_category(&self, members: &[usize]) -> (usize, f64) {
        let c = self.cfg.categories;
        let mut mean = vec![0.0; c];
        for &u in members {
            for (i, p) in self.twins[u].preference_estimate().iter().enumerate() {
                mean[i] += p;
            }
        }
        let mut best = 0;
        for i in 1..c {
            if mean[i] > mean[best] {
                best = i;
            }
        }
        (best, mean[best] / members.len().max(1) as f64)
    }

    /// User-weighted preference mass the current grouping concentrates on
    /// its serving categories; the cluster-count agent's quality signal.
    fn serving_mass(&self) -> f64 {
        let n: usize = self.groups.iter().map(|g| g.members.len()).sum();
        if n == 0 {
            return 0.0;
        }
        self.groups
            .iter()
            .map(|g| {
                let (_, share) = self.group_serving_category(&g.members);
                share * g.members.len() as f64
            })
            .sum::<f64>()
            / n as f64
    }

    fn refresh_group_swipe_dists(&mut self) {
        let bins = self.cfg.duration_bins.clone();
        for g in 0..self.groups.len() {
            let durations: Vec<f64> = self.groups[g]
                .members
                .iter()
                .flat_map(|&u| self.recent_durations[u].iter().copied())
                .collect();
            if let Ok(dist) = swipe_distribution(&durations, &bins) {
                self.groups[g].swipe_distribution = dist;
            }
        }
    }

    /// Initial grouping before any model exists: round-robin chunks, one
    /// serving category per group. Delivery pauses for this slot.
    fn initial_grouping(&mut self, events: &mut Vec<SlotEvent>) {
        let n = self.users.len();
        let k = self.cfg.k_min.min(n.max(1));
        self.groups = (0..k)
            .map(|id| MulticastGroup {
                id,
                members: (0..n).filter(|u| u % k == id).collect(),
                swipe_distribution: Vec::new(),
                bitrate_bps: 0.0,
                bandwidth_hz: 0.0,
                prefetch_depth: 1,
            })
            .collect();
        self.groups.retain(|g| !g.members.is_empty());
        for (id, g) in self.groups.iter_mut().enumerate() {
            g.id = id;
        }
        for (g, group) in self.groups.iter().enumerate() {
            for &u in &group.members {
                self.group_of[u] = g;
            }
        }
        self.serving_category = (0..self.groups.len())
            .map(|g| g % self.cfg.categories)
            .collect();
        self.refresh_group_swipe_dists();
        self.paused = true;
        events.push(SlotEvent::Regroup {
            k: self.groups.len(),
        });
    }

    /// Full model-driven regrouping: encode behavior windows, let the
    /// cluster-count agent pick k, cluster, and refresh serving categories.
    fn full_regroup(&mut self, slot: u64, events: &mut Vec<SlotEvent>) -> Result<()> {
        let n = self.users.len();
        if n == 0 {
            return Ok(());
        }
        self.k_agent.epsilon = (0.3 * 0.99f64.powi(slot as i32)).max(0.04);
        // Score the incumbent grouping (serving refreshed to current
        // estimates) so a worse candidate can be rejected outright.
        let incumbent = if self.groups.is_empty() {
            None
        } else {
            self.serving_category = self
                .groups
                .iter()
                .map(|g| self.group_serving_category(&g.members).0)
                .collect();
            let snap = self.build_snapshot(slot);
            let replay = replay_policy(&snap, &ReplayPolicy::SliceShare(snap.msvs_share));
            let score = replay + 0.5 * self.cfg.qoe.beta * self.serving_mass();
            Some((
                self.groups.clone(),
                self.group_of.clone(),
                self.serving_category.clone(),
                score,
            ))
        };
        let latents: Vec<Vec<f64>> = (0..n).map(|u| self.behavior_latent(u)).collect();
        let outcome = abstract_features(
            &latents,
            &self.k_agent,
            self.cfg.k_min,
            self.cfg.k_max,
            &mut self.rng_agent,
        )?;
        let mut groups: Vec<MulticastGroup> = (0..outcome.k)
            .map(|id| MulticastGroup {
                id,
                members: Vec::new(),
                swipe_distribution: Vec::new(),
                bitrate_bps: 0.0,
                bandwidth_hz: 0.0,
                prefetch_depth: 1,
            })
            .collect();
        for (u, &cluster) in outcome.clustering.assignment.iter().enumerate() {
            groups[cluster].members.push(u);
        }
        groups.retain(|g| !g.members.is_empty());
        for (id, g) in groups.iter_mut().enumerate() {
            g.id = id;
        }
        self.groups = groups;
        for (g, group) in self.groups.iter().enumerate() {
            for &u in &group.members {
                self.group_of[u] = g;
            }
        }
        self.serving_category = self
            .groups
            .iter()
            .map(|g| self.group_serving_category(&g.members).0)
            .collect();
        // Reward belongs to the grouping the action just produced; the next
        // state only becomes known at the following regroup.
        // Alignment saves abandon stalls (roughly half a slot each); the
        // replay prices the bandwidth cost of running this many streams.
        let snap = self.build_snapshot(slot);
        let replay = replay_policy(&snap, &ReplayPolicy::SliceShare(snap.msvs_share));
        let mass = self.serving_mass();
        let reward =
            replay + 0.5 * self.cfg.qoe.beta * mass - self.cfg.lambda_k * outcome.k as f64;
        if let Some((s, a, r)) = self.k_pending.take() {
            self.k_agent.update(s, a, r, outcome.state, &mut self.rng_agent);
        }
        self.k_pending = Some((outcome.state, outcome.action, reward));
        let cand_score = replay + 0.5 * self.cfg.qoe.beta * mass;
        let accepted = incumbent
            .as_ref()
            .map_or(true, |&(.., inc)| cand_score + 1e-9 >= inc);
        if accepted {
            self.centroids = outcome.clustering.centroids.clone();
            for (u, &e) in outcome.entropies.iter().enumerate() {
                self.pending_entropies[u] = Some(e);
            }
            self.refresh_group_swipe_dists();
            events.push(SlotEvent::Regroup {
                k: self.groups.len(),
            });
        } else {
            let (groups, group_of, serving, inc) = incumbent.unwrap();
            self.groups = groups;
            self.group_of = group_of;
            self.serving_category = serving;
            self.refresh_group_swipe_dists();
            events.push(SlotEvent::PolicyValidated {
                phase: "regroup".to_string(),
                accepted: false,
                gain: cand_score - inc,
            });
        }
        self.last_regroup_slot = slot;
        Ok(())
    }

    /// Refit the feature autoencoder on current behavior windows so the
    /// latent space tracks the estimate distribution as it sharpens.
    fn refresh_autoencoder(&mut self) -> Result<()> {
        let n = self.users.len();
        if n == 0 {
            return Ok(());
        }
        let features: Vec<Vec<f64>> = (0..n)
            .map(|u| {
                self.twins[u]
                    .behavior_features(self.cfg.behavior_window)
                    .unwrap_or_else(|| vec![0.0; self.cfg.categories + 1])
            })
            .collect();
        let hyper = AutoencoderHyper {
            epochs: 200,
            ..Default::default()
        };
        self.autoencoder = Some(Autoencoder::train(
            &features,
            self.cfg.latent_dim,
            hyper,
            &mut self.rng_learner,
        )?);
        Ok(())
    }

    fn train_models(&mut self) -> Result<()> {
        let n = self.users.len();
        if n == 0 {
            return Ok(());
        }
        let features: Vec<Vec<f64>> = (0..n)
            .map(|u| {
                self.twins[u]
                    .behavior_features(self.cfg.behavior_window)
                    .unwrap_or_else(|| vec![0.0; self.cfg.categories + 1])
            })
            .collect();
        let hyper = AutoencoderHyper {
            epochs: 800,
            ..Default::default()
        };
        self.autoencoder = Some(Autoencoder::train(
            &features,
            self.cfg.latent_dim,
            hyper,
            &mut self.rng_learner,
        )?);
        for twin in &mut self.twins {
            twin.train_predictor(self.cfg.predictor, &mut self.rng_learner)?;
        }
        self.models_ready = true;
        Ok(())
    }

    fn background_demand(&self, slot: u64) -> f64 {
        self.cfg.background_share
            * self.cfg.total_bandwidth_hz
            * (1.0 + 0.3 * (slot as f64 / 15.0).sin())
    }

    fn build_snapshot(&self, slot: u64) -> TwinSnapshot {
        let weights = self.station_weights();
        let groups = self
            .groups
            .iter()
            .map(|g| {
                let worst_se = g
                    .members
                    .iter()
                    .map(|&u| self.user_se[u])
                    .fold(f64::INFINITY, f64::min);
                let station = self.majority_station(&g.members);
                SnapshotGroup {
                    size: g.members.len(),
                    station,
                    worst_se,
                }
            })
            .collect();
        TwinSnapshot {
            total_bandwidth_hz: self.cfg.total_bandwidth_hz,
            msvs_share: self.sdt.current.msvs_quota_hz / self.cfg.total_bandwidth_hz,
            station_weights: weights,
            groups,
            ladder: self.cfg.bitrate_ladder.clone(),
            slot_duration: self.slot_duration,
            qoe: self.cfg.qoe,
            horizon: self.cfg.validation_horizon,
            background_demand_hz: self.background_demand(slot),
        }
    }

    fn majority_station(&self, members: &[usize]) -> usize {
        let mut counts = vec![0usize; self.stations.len()];
        for &u in members {
            counts[self.users[u].attached_station] += 1;
        }
        let mut best = 0;
        for s in 1..counts.len() {
            if counts[s] > counts[best] {
                best = s;
            }
        }
        best
    }

    fn phase_collect(&mut self, slot: u64, events: &mut Vec<SlotEvent>) -> Result<()> {
        self.metrics = MetricsRow {
            slot,
            ..Default::default()
        };
        self.tier.start_slot();
        self.paused = false;

        for spec in self.cfg.drifts.clone() {
            if spec.slot == slot {
                let affected = inject_drift(&mut self.users, &spec, &mut self.rng_drift);
                events.push(SlotEvent::Drift {
                    affected: affected.len(),
                });
            }
        }

        for s in &mut self.stations {
            s.attached_users.clear();
        }
        for u in 0..self.users.len() {
            step_mobility(
                &mut self.users[u],
                &self.cfg.arena,
                self.slot_duration,
                &mut self.rng_mobility,
            );
            let (nearest, dist) = self
                .stations
                .iter()
                .map(|s| (s.id, s.position.distance(&self.users[u].position)))
                .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
                .unwrap();
            let pl = path_loss_db(dist, &self.cfg.path_loss, Some(&mut self.rng_channel));
            self.users[u].channel_gain_db = -pl;
            self.users[u].attached_station = nearest;
            self.stations[nearest].attached_users.push(u);
            let snr = snr_linear(
                self.cfg.tx_power_dbm,
                pl,
                self.cfg.path_loss.noise_floor_dbm,
            );
            self.user_snr[u] = snr;
            self.user_se[u] = achievable_rate_bps(snr, 1.0);
        }

        for u in 0..self.users.len() {
            if self.twins[u].collection_due(slot) {
                let sample = crate::dt::CollectedSample {
                    status: self.status_vector(u),
                    swipes: std::mem::take(&mut self.swipes_pending[u]),
                };
                self.twins[u].ingest(slot, sample)?;
                self.abandons_since[u] = 0.0;
                self.slots_since[u] = 0.0;
                if slot == 0 {
                    // Stagger subsequent collections across the initial
                    // period so reports spread over slots.
                    self.twins[u].last_collection_slot =
                        Some((u as u64) % self.cfg.udt.initial_period);
                }
                events.push(SlotEvent::Collection { user: u });
                self.metrics.collections += 1;
            }
        }
        Ok(())
    }

    fn phase_twin_predict(&mut self, slot: u64, events: &mut Vec<SlotEvent>) -> Result<()> {
        for u in 0..self.users.len() {
            let has_record = self.twins[u]
                .records
                .last()
                .map_or(false, |r| r.slot == slot);
            if !has_record {
                let rec = self.twins[u].emulate(slot)?;
                let fallback = matches!(
                    rec.source,
                    crate::dt::RecordSource::Predicted { fallback: true }
                );
                events.push(SlotEvent::TwinPrediction { user: u, fallback });
            }
            self.twins[u].forecast_next(slot + 1);
        }
        Ok(())
    }

    fn phase_detect(&mut self, slot: u64, events: &mut Vec<SlotEvent>) -> Result<()> {
        match self.cfg.scheme {
            Scheme::FixedDt => {
                // Detector disabled: updates at fixed multiples only.
                if self.models_ready && slot > 0 && slot % self.cfg.fixed_update_period == 0 {
                    let mut updated = 0;
                    for twin in &mut self.twins {
                        if twin.update_predictor(16).is_ok() {
                            updated += 1;
                        }
                    }
                    self.refresh_autoencoder()?;
                    events.push(SlotEvent::ModelUpdate { users: updated });
                    self.metrics.updates += 1;
                    self.regroup_due = true;
                    self.max_trigger_level = f64::INFINITY;
                }
                Ok(())
            }
            Scheme::Proposed | Scheme::HierDrl => {
                if !self.models_ready {
                    // No trained predictor to score or update yet.
                    return Ok(());
                }
                let mut triggered_users = Vec::new();
                for u in 0..self.users.len() {
                    // Both error streams are consumed at collection instants.
                    if self.twins[u].last_collection_slot != Some(slot) {
                        continue;
                    }
                    let labeled = self.twins[u].pending_labeled.take();
                    let unlabeled = self.pending_entropies[u].take();
                    if labeled.is_none() && unlabeled.is_none() {
                        continue;
                    }
                    let (acc_l, acc_u) = self.twins[u].detector.accumulators();
                    let theta_l = self.twins[u].detector.theta_labeled;
                    let theta_u = self.twins[u].detector.theta_unlabeled;
                    let triggered = self.twins[u].detector.accumulate(labeled, unlabeled);
                    if labeled.is_some() {
                        self.twins[u].adjust_period();
                    }
                    if triggered {
                        let level = ((acc_l + labeled.unwrap_or(0.0)) / theta_l)
                            .max((acc_u + unlabeled.unwrap_or(0.0)) / theta_u);
                        self.max_trigger_level = self.max_trigger_level.max(level);
                        events.push(SlotEvent::Trigger {
                            user: u,
                            labeled: labeled.unwrap_or(0.0),
                            unlabeled: unlabeled.unwrap_or(0.0),
                        });
                        self.metrics.triggers += 1;
                        triggered_users.push(u);
                    }
                }
                if !triggered_users.is_empty() {
                    let mut updated = 0;
                    for &u in &triggered_users {
                        if self.twins[u].update_predictor(16).is_ok() {
                            updated += 1;
                        }
                    }
                    self.refresh_autoencoder()?;
                    events.push(SlotEvent::ModelUpdate {
                        users: updated,
                    });
                    self.metrics.updates += 1;
                    if self.models_ready {
                        self.regroup_due = true;
                    }
                }
                Ok(())
            }
        }
    }

    fn phase_abstract(&mut self, slot: u64, events: &mut Vec<SlotEvent>) -> Result<()> {
        if self.users.is_empty() {
            return Ok(());
        }
        if slot == 0 {
            self.initial_grouping(events);
            return Ok(());
        }
        if slot == self.cfg.warmup_slots {
            self.train_models()?;
            self.full_regroup(slot, events)?;
            self.regroup_due = false;
            self.max_trigger_level = 0.0;
            return Ok(());
        }
        if self.regroup_due
            && self.models_ready
            && slot >= self.last_regroup_slot + self.cfg.regroup_cooldown_slots
        {
            let decision = self
                .tier
                .select_inference_tier(TaskClass::FeatureAbstraction, self.max_trigger_level);
            if decision.tier == Tier::Heavy {
                self.full_regroup(slot, events)?;
                self.regroup_due = false;
                self.max_trigger_level = 0.0;
            }
            // Budget-deferred heavy work retries next slot.
        }
        if self.models_ready && !self.centroids.is_empty() {
            // Light per-slot pass: refresh entropies against the standing
            // centroids for the next detect phase.
            let latents: Vec<Vec<f64>> =
                (0..self.users.len()).map(|u| self.behavior_latent(u)).collect();
            let tau = crate::dt::median_pairwise_distance(&latents);
            for (u, l) in latents.iter().enumerate() {
                let probs = crate::dt::soft_assignment(l, &self.centroids, tau);
                if let Ok(h) = crate::dt::unlabeled_error(&probs) {
                    self.pending_entropies[u] = Some(h);
                }
            }
        }
        self.refresh_group_swipe_dists();
        Ok(())
    }

    fn phase_operate(&mut self, slot: u64, events: &mut Vec<SlotEvent>) -> Result<()> {
        let report: Vec<(usize, f64)> = self
            .stations
            .iter()
            .map(|s| (s.id, s.attached_users.len() as f64))
            .collect();
        self.idt.mirror_update(&report)?;

        if self.stations.len() < 2 || self.groups.is_empty() {
            return Ok(());
        }
        if slot > 0 && slot % self.cfg.operate_period == 0 {
            let state = self.idt.load_state();
            if let Some((s, a)) = self.split_pending.take() {
                let (sum, count) = self.operate_qoe;
                let reward = if count > 0 { sum / count as f64 } else { 0.0 };
                self.idt.agent.update(s, a, reward, state, &mut self.rng_agent);
            }
            self.operate_qoe = (0.0, 0);
            let action = self.idt.agent.select_action(state, &mut self.rng_agent);
            let candidate_split = SPLIT_ACTIONS[action];
            let snapshot = self.build_snapshot(slot);
            let mut cand_weights = self.station_weights();
            let mut inc_weights = cand_weights.clone();
            let n = self.stations.len() as f64;
            cand_weights[0] = candidate_split;
            for w in cand_weights.iter_mut().skip(1) {
                *w = (1.0 - candidate_split) / (n - 1.0);
            }
            inc_weights[0] = self.station_split;
            let report = validate_policy(
                self.idt.snapshots,
                &ReplayPolicy::StationSplit(cand_weights),
                &ReplayPolicy::StationSplit(inc_weights),
                |p| replay_policy(&snapshot, p),
            )?;
            events.push(SlotEvent::PolicyValidated {
                phase: "operate".to_string(),
                accepted: report.accepted,
                gain: report.predicted_gain,
            });
            if report.accepted {
                self.station_split = candidate_split;
            }
            self.split_pending = Some((state, action));
        }
        Ok(())
    }

    fn phase_slice(&mut self, slot: u64, events: &mut Vec<SlotEvent>) -> Result<()> {
        if self.groups.is_empty() {
            return Ok(());
        }
        if slot > 0 && slot % self.slicing_period == 0 {
            let msvs_demand: f64 = self
                .plan
                .iter()
                .zip(&self.groups)
                .map(|(p, g)| {
                    let worst = g
                        .members
                        .iter()
                        .map(|&u| self.user_se[u])
                        .fold(f64::INFINITY, f64::min);
                    if worst > 0.0 {
                        p.bitrate_bps / worst
                    } else {
                        0.0
                    }
                })
                .sum();
            let background = self.background_demand(slot);
            let state = self.sdt.demand_state(msvs_demand, background);
            if let Some((s, a)) = self.slice_pending.take() {
                let reward = self.sdt.satisfaction();
                self.sdt.agent.update(s, a, reward, state, &mut self.rng_agent);
            }
            let (action, candidate) = self.sdt.propose_quota(state, &mut self.rng_agent);
            let snapshot = self.build_snapshot(slot);
            let cand_share = candidate.msvs_quota_hz / self.cfg.total_bandwidth_hz;
            let inc_share = self.sdt.current.msvs_quota_hz / self.cfg.total_bandwidth_hz;
            let report = validate_policy(
                self.sdt.snapshots.max(self.idt.snapshots),
                &ReplayPolicy::SliceShare(cand_share),
                &ReplayPolicy::SliceShare(inc_share),
                |p| replay_policy(&snapshot, p),
            )?;
            events.push(SlotEvent::PolicyValidated {
                phase: "slice".to_string(),
                accepted: report.accepted,
                gain: report.predicted_gain,
            });
            if report.accepted {
                self.sdt.apply(candidate);
                events.push(SlotEvent::SliceReconfig {
                    msvs_share: cand_share,
                });
            }
            self.slice_pending = Some((state, action));
        }
        Ok(())
    }

    fn plan_heuristic(&mut self) -> Result<Vec<GroupPlan>> {
        let quota = self.sdt.current.msvs_quota_hz;
        let weights = self.station_weights();
        let group_station: Vec<usize> = self
            .groups
            .iter()
            .map(|g| self.majority_station(&g.members))
            .collect();
        let group_videos: Vec<usize> = self.groups.iter().map(|g| self.mode_video(g)).collect();
        let mut merged: Vec<Option<GroupPlan>> = vec![None; self.groups.len()];
        for s in 0..self.stations.len() {
            let idx: Vec<usize> = (0..self.groups.len())
                .filter(|&g| group_station[g] == s)
                .collect();
            if idx.is_empty() {
                continue;
            }
            let station_groups: Vec<MulticastGroup> =
                idx.iter().map(|&g| self.groups[g].clone()).collect();
            let videos: Vec<usize> = idx.iter().map(|&g| group_videos[g]).collect();
            let plan = plan_3c(
                &station_groups,
                &self.user_se,
                quota * weights[s],
                &self.cfg.bitrate_ladder,
                &self.edge,
                &videos,
                &self.cfg.qoe,
                self.slot_duration,
                &self.cfg.duration_bins,
                self.cfg.prefetch_horizon_slots,
                self.cfg.max_prefetch_depth,
            )?;
            for (i, p) in plan.groups.into_iter().enumerate() {
                let mut p = p;
                p.group = idx[i];
                merged[idx[i]] = Some(p);
            }
        }
        Ok(merged.into_iter().flatten().collect())
    }

    fn plan_hier(&mut self, slot: u64) -> Vec<GroupPlan> {
        let quota = self.sdt.current.msvs_quota_hz;
        let ladder = self.cfg.bitrate_ladder.clone();
        let group_videos: Vec<usize> = self.groups.iter().map(|g| self.mode_video(g)).collect();
        let hier = self.hier.as_mut().expect("hier scheme has agents");
        hier.set_epsilon(slot);

        let top_state = self.idt.load_state();
        if let Some((s, a)) = hier.pending_top.take() {
            hier.top
                .update(s, a, self.last_mean_qoe, top_state, &mut self.rng_agent);
        }
        let pattern = hier.top.select_action(top_state, &mut self.rng_agent);
        hier.pending_top = Some((top_state, pattern));

        let total: usize = self.groups.iter().map(|g| g.members.len()).sum();
        let k = self.groups.len();
        let mut shares: Vec<f64> = match pattern {
            1 => vec![quota / k as f64; k],
            2 => {
                let largest = (0..k)
                    .max_by_key(|&g| (self.groups[g].members.len(), std::cmp::Reverse(g)))
                    .unwrap();
                let rest: usize = total - self.groups[largest].members.len();
                (0..k)
                    .map(|g| {
                        if g == largest {
                            0.5 * quota
                        } else if rest > 0 {
                            0.5 * quota * self.groups[g].members.len() as f64 / rest as f64
                        } else {
                            0.0
                        }
                    })
                    .collect()
            }
            _ => (0..k)
                .map(|g| quota * self.groups[g].members.len() as f64 / total as f64)
                .collect(),
        };
        if k == 1 {
            shares = vec![quota];
        }

        let worst_se: Vec<f64> = self
            .groups
            .iter()
            .map(|g| {
                g.members
                    .iter()
                    .map(|&u| self.user_se[u])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let mut rungs = Vec::with_capacity(k);
        let mut infeasible = Vec::with_capacity(k);
        let mut new_pending = Vec::with_capacity(k);
        for g in 0..k {
            let rate = worst_se[g] * shares[g];
            let state = HierPolicy::rate_state(rate, ladder[0]);
            if let Some(&(s, a)) = hier.pending_bottom.get(g) {
                hier.bottom
                    .update(s, a, self.last_mean_qoe, state, &mut self.rng_agent);
            }
            let action = hier.bottom.select_action(state, &mut self.rng_agent);
            new_pending.push((state, action));
            rungs.push(action);
            infeasible.push(ladder[action] > rate);
        }
        hier.pending_bottom = new_pending;

        finalize_plan(
            &self.groups,
            rungs,
            shares,
            infeasible,
            &ladder,
            &self.edge,
            &group_videos,
            self.slot_duration,
            &self.cfg.duration_bins,
            self.cfg.prefetch_horizon_slots,
            self.cfg.max_prefetch_depth,
        )
        .groups
    }

    fn mode_video(&self, group: &MulticastGroup) -> usize {
        let mut counts: Vec<(usize, usize)> = Vec::new();
        for &u in &group.members {
            let v = self.users[u].current_video;
            match counts.iter_mut().find(|(vid, _)| *vid == v) {
                Some((_, c)) => *c += 1,
                None => counts.push((v, 1)),
            }
        }
        counts
            .into_iter()
            .max_by_key(|&(v, c)| (c, std::cmp::Reverse(v)))
            .map(|(v, _)| v)
            .unwrap_or(0)
    }

    fn phase_deliver(&mut self, slot: u64, events: &mut Vec<SlotEvent>) -> Result<()> {
        self.metrics.msvs_quota_hz = self.sdt.current.msvs_quota_hz;
        if self.groups.is_empty() {
            return Ok(());
        }
        if self.paused {
            self.plan = Vec::new();
            return Ok(());
        }
        let plans = match self.cfg.scheme {
            Scheme::HierDrl => self.plan_hier(slot),
            _ => self.plan_heuristic()?,
        };

        for p in &plans {
            if let Some(job) = p.transcode_job {
                if !self.edge.cache.contains(&job) {
                    self.edge.cache.push(job);
                }
            }
        }

        for p in &plans {
            let g = p.group;
            self.groups[g].bitrate_bps = p.bitrate_bps;
            self.groups[g].bandwidth_hz = p.bandwidth_hz;
            self.groups[g].prefetch_depth = p.prefetch_depth;
            let snrs: Vec<f64> = self.groups[g]
                .members
                .iter()
                .map(|&u| self.user_snr[u])
                .collect();
            let outcome = multicast_deliver(
                g,
                &snrs,
                p.bitrate_bps,
                p.bandwidth_hz.max(f64::MIN_POSITIVE),
                self.slot_duration,
            )?;
            events.push(SlotEvent::Delivery {
                group: g,
                bitrate_bps: p.bitrate_bps,
                delivered_s: outcome.delivered_seconds,
            });
            let stock_cap = p.prefetch_depth as f64 * self.cfg.stock_cap_s;
            let members = self.groups[g].members.clone();
            for u in members {
                let video = self.catalog[self.users[u].current_video];
                let room =
                    (video.length_s - self.users[u].playhead - self.users[u].buffer).max(0.0);
                let fill = outcome.delivered_seconds.min(room);
                self.users[u].buffer += fill;
                let spill = outcome.delivered_seconds - fill;
                self.stock[u] = (self.stock[u] + spill).min(stock_cap);
            }
        }
        self.plan = plans;
        Ok(())
    }

    fn phase_account(&mut self, slot: u64, _events: &mut Vec<SlotEvent>) -> Result<()> {
        let n = self.users.len();
        let mut row_components = Vec::with_capacity(n);
        let mut qoe_sum = 0.0;
        let mut bitrate_sum = 0.0;
        let mut buffer_sum = 0.0;
        for u in 0..n {
            let g = self.group_of[u];
            let group_bitrate = if self.paused || self.plan.is_empty() {
                0.0
            } else {
                self.groups.get(g).map_or(0.0, |grp| grp.bitrate_bps)
            };
            let consumed = self.users[u].buffer.min(self.slot_duration);
            let mut consumed_eff = consumed;
            let mut waste = 0.0;
            self.slots_since[u] += 1.0;

            if consumed > 0.0 {
                let video = self.catalog[self.users[u].current_video];
                let swipe = sample_swipe(
                    &self.users[u],
                    &video,
                    slot,
                    self.slot_duration,
                    &self.cfg.swipe,
                    &mut self.rng_swipe,
                );
                self.users[u].buffer -= consumed;
                self.users[u].playhead += consumed;
                if let Some(event) = swipe {
                    // Remaining buffered seconds of the dropped video are
                    // wasted prefetch.
                    waste += self.users[u].buffer;
                    self.users[u].buffer = 0.0;
                    let full = self.cfg.engagement_norm_fraction * video.length_s;
                    let fraction = (event.watched_duration / full).clamp(0.0, 1.0);
                    self.swipes_pending[u].push((video.category, fraction));
                    if self.recent_durations[u].len() == 10 {
                        self.recent_durations[u].pop_front();
                    }
                    self.recent_durations[u].push_back(event.watched_duration);

                    let serving = self
                        .serving_category
                        .get(g)
                        .copied()
                        .unwrap_or(video.category);
                    let hit = if event.abandoned { 1.0 } else { 0.0 };
                    self.abandon_ema[u] = 0.75 * self.abandon_ema[u] + 0.25 * hit;
                    // Persistent abandons mean the serving pick is stale, so
                    // probing ramps up until engagement returns.
                    let explore_prob = (self.cfg.explore_category_prob
                        + 0.8 * self.abandon_ema[u])
                        .min(0.7);
                    let category = if self.rng_swipe.gen::<f64>() < explore_prob {
                        // Round-robin probe: the least recently watched
                        // category, so coverage does not rely on luck.
                        (0..self.cfg.categories)
                            .min_by_key(|&c| (self.category_last_pick[u][c], c))
                            .unwrap()
                    } else {
                        serving
                    };
                    self.category_last_pick[u][category] = slot + 1;
                    let candidates: Vec<usize> = self
                        .catalog
                        .iter()
                        .filter(|v| v.category == category && v.id != video.id)
                        .map(|v| v.id)
                        .collect();
                    let next = if candidates.is_empty() {
                        (video.id + 1) % self.catalog.len()
                    } else {
                        candidates[self.rng_swipe.gen_range(0..candidates.len())]
                    };
                    self.users[u].current_video = next;
                    self.users[u].playhead = 0.0;
                    let next_len = self.catalog[next].length_s;
                    let transfer = self.stock[u].min(next_len);
                    self.users[u].buffer = transfer;
                    self.stock[u] -= transfer;
                    if event.abandoned {
                        self.abandons_since[u] += 1.0;
                        // Mid-slot abandon: half the slot went to the dropped
                        // video; the rest plays from prefetched stock of the
                        // next video or stalls as startup delay.
                        let watched_part = consumed * 0.5;
                        let resume =
                            (consumed - watched_part).min(self.users[u].buffer);
                        self.users[u].buffer -= resume;
                        self.users[u].playhead += resume;
                        consumed_eff = watched_part + resume;
                    }
                }
            }

            let rebuffer = self.slot_duration - consumed_eff;
            let eff_bitrate = if consumed_eff > 0.0 { group_bitrate } else { 0.0 };
            let c = QoeComponents {
                bitrate_bps: eff_bitrate,
                prev_bitrate_bps: self.prev_bitrate[u],
                rebuffer_s: rebuffer,
                wasted_prefetch_s: waste,
            };
            let q = qoe_slot(&c, &self.cfg.qoe, self.cfg.bitrate_ladder[0]);
            self.slot_qoe[u] = q;
            qoe_sum += q;
            bitrate_sum += eff_bitrate;
            buffer_sum += self.users[u].buffer;
            self.metrics.rebuffer_s += rebuffer;
            self.metrics.wasted_prefetch_s += waste;
            self.prev_bitrate[u] = eff_bitrate;
            row_components.push(c);
        }
        self.components.push(row_components);
        if n > 0 {
            self.metrics.mean_qoe = qoe_sum / n as f64;
            self.metrics.mean_bitrate_bps = bitrate_sum / n as f64;
            self.metrics.mean_buffer_s = buffer_sum / n as f64;
        }
        self.last_mean_qoe = self.metrics.mean_qoe;
        self.sdt.record_qoe(self.metrics.mean_qoe);
        self.operate_qoe.0 += self.metrics.mean_qoe;
        self.operate_qoe.1 += 1;
        Ok(())
    }
}

impl SlotModel for MsvsScenario {
    fn phase(&mut self, phase: Phase, slot: u64, events: &mut Vec<SlotEvent>) -> Result<()> {
        match phase {
            Phase::Collect => self.phase_collect(slot, events),
            Phase::TwinPredict => self.phase_twin_predict(slot, events),
            Phase::Detect => self.phase_detect(slot, events),
            Phase::Abstract => self.phase_abstract(slot, events),
            Phase::Operate => self.phase_operate(slot, events),
            Phase::Slice => self.phase_slice(slot, events),
            Phase::Deliver => self.phase_deliver(slot, events),
            Phase::Account => self.phase_account(slot, events),
        }
    }

    fn metrics(&self, _slot: u64) -> MetricsRow {
        self.metrics.clone()
    }

    fn slot_qoe(&self) -> &[f64] {
        &self.slot_qoe
    }
}

/// Run the full case study under `sim` timing and the scenario's scheme.
pub fn run_scenario(sim: &SimConfig, cfg: &ScenarioConfig) -> Result<SimReport> {
    let mut scenario = MsvsScenario::new(sim, cfg)?;
    run_with_model(sim, &mut scenario)
}

/// The learned two-level 3C baseline; requires the hier-drl scheme.
pub fn run_hier_drl_baseline(sim: &SimConfig, cfg: &ScenarioConfig) -> Result<SimReport> {
    if cfg.scheme != Scheme::HierDrl {
        return Err(SimError::InvalidConfig(
            "hier-drl baseline requires scheme = hier-drl".into(),
        ));
    }
    run_scenario(sim, cfg)
}
