//! Ground-truth physical network: user mobility, wireless channel, swipe
//! driven video consumption with injectable behavior drift, and multicast
//! delivery through base stations and the edge transcoder.

use crate::error::{Result, SimError};
use crate::rng::RandomStream;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub type UserId = usize;
pub type VideoId = usize;
pub type StationId = usize;

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn distance(&self, other: &Position) -> f64 {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

/// Rectangular arena with random-waypoint mobility parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Arena {
    pub width_m: f64,
    pub height_m: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl Default for Arena {
    fn default() -> Self {
        Self {
            width_m: 500.0,
            height_m: 500.0,
            v_min: 0.0,
            v_max: 3.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct User {
    pub id: UserId,
    pub position: Position,
    pub velocity: (f64, f64),
    /// Probability vector over video categories; sums to 1.
    pub preference: Vec<f64>,
    pub channel_gain_db: f64,
    /// Seconds of the current video buffered and playable.
    pub buffer: f64,
    pub current_video: VideoId,
    /// Seconds of the current video already watched.
    pub playhead: f64,
    pub attached_station: StationId,
    /// Random-waypoint target; a new one is drawn on arrival.
    waypoint: Position,
    speed: f64,
}

impl User {
    pub fn new(
        id: UserId,
        arena: &Arena,
        categories: usize,
        preference: Vec<f64>,
        rng: &mut RandomStream,
    ) -> Self {
        debug_assert_eq!(preference.len(), categories);
        let position = Position {
            x: rng.gen::<f64>() * arena.width_m,
            y: rng.gen::<f64>() * arena.height_m,
        };
        let waypoint = Position {
            x: rng.gen::<f64>() * arena.width_m,
            y: rng.gen::<f64>() * arena.height_m,
        };
        let speed = arena.v_min + rng.gen::<f64>() * (arena.v_max - arena.v_min);
        Self {
            id,
            position,
            velocity: (0.0, 0.0),
            preference,
            channel_gain_db: 0.0,
            buffer: 0.0,
            current_video: 0,
            playhead: 0.0,
            attached_station: 0,
            waypoint,
            speed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BaseStation {
    pub id: StationId,
    pub position: Position,
    pub bandwidth_hz: f64,
    pub tx_power_dbm: f64,
    pub attached_users: Vec<UserId>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeServer {
    /// Transcode units available per slot.
    pub compute_capacity: usize,
    /// Strictly increasing bitrates in bps.
    pub bitrate_ladder: Vec<f64>,
    /// (video, ladder rung) pairs already transcoded.
    pub cache: Vec<(VideoId, usize)>,
}

impl EdgeServer {
    pub fn is_cached(&self, video: VideoId, rung: usize) -> bool {
        self.cache.iter().any(|&(v, r)| v == video && r == rung)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SwipeEvent {
    pub user: UserId,
    pub slot: u64,
    pub video: VideoId,
    pub category: usize,
    pub watched_duration: f64,
    pub abandoned: bool,
}

/// How a drift remaps affected users' preference vectors.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum PreferenceRemap {
    /// Reverse the preference vector.
    Reverse,
    /// Rotate categories by one position.
    Rotate,
    /// Draw a fresh random preference vector.
    Resample,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DriftSpec {
    pub slot: u64,
    /// Fraction of users affected, in (0, 1].
    pub fraction: f64,
    pub remap: PreferenceRemap,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PathLossParams {
    /// Reference loss at d0, in dB.
    pub pl0_db: f64,
    pub d0_m: f64,
    pub exponent: f64,
    /// Log-normal shadowing standard deviation in dB; 0 disables.
    pub shadow_sigma_db: f64,
    pub noise_floor_dbm: f64,
}

impl Default for PathLossParams {
    fn default() -> Self {
        Self {
            pl0_db: 38.0,
            d0_m: 1.0,
            exponent: 3.0,
            shadow_sigma_db: 4.0,
            noise_floor_dbm: -100.0,
        }
    }
}

/// Per-slot swipe hazard parameters: hazard is h_min + (h_max - h_min) *
/// (1 - preference[category]).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SwipeParams {
    pub h_min: f64,
    pub h_max: f64,
}

impl Default for SwipeParams {
    fn default() -> Self {
        Self {
            h_min: 0.02,
            h_max: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Video {
    pub id: VideoId,
    pub category: usize,
    pub length_s: f64,
}

/// Synthetic short-video catalog: uniform lengths in [10, 60] s across
/// `categories` categories.
pub fn generate_catalog(count: usize, categories: usize, rng: &mut RandomStream) -> Vec<Video> {
    (0..count)
        .map(|id| Video {
            id,
            category: rng.gen_range(0..categories),
            length_s: 10.0 + rng.gen::<f64>() * 50.0,
        })
        .collect()
}

/// Advance one user by random-waypoint motion for `dt` seconds.
pub fn step_mobility(user: &mut User, arena: &Arena, dt: f64, rng: &mut RandomStream) {
    debug_assert!(dt > 0.0);
    let mut remaining = dt;
    while remaining > 0.0 {
        let to_wp = (
            user.waypoint.x - user.position.x,
            user.waypoint.y - user.position.y,
        );
        let dist = (to_wp.0 * to_wp.0 + to_wp.1 * to_wp.1).sqrt();
        if user.speed <= 0.0 {
            user.velocity = (0.0, 0.0);
            break;
        }
        let travel = user.speed * remaining;
        if travel >= dist {
            // Waypoint reached: draw a new waypoint and speed.
            user.position = user.waypoint;
            remaining -= dist / user.speed;
            user.waypoint = Position {
                x: rng.gen::<f64>() * arena.width_m,
                y: rng.gen::<f64>() * arena.height_m,
            };
            user.speed = arena.v_min + rng.gen::<f64>() * (arena.v_max - arena.v_min);
        } else {
            let dir = (to_wp.0 / dist, to_wp.1 / dist);
            user.position.x += dir.0 * travel;
            user.position.y += dir.1 * travel;
            user.velocity = (dir.0 * user.speed, dir.1 * user.speed);
            remaining = 0.0;
        }
    }
}

/// Log-distance path loss: PL = PL0 + 10 n log10(d / d0) (+ shadowing).
/// Distances below d0 clamp to d0.
pub fn path_loss_db(distance_m: f64, params: &PathLossParams, rng: Option<&mut RandomStream>) -> f64 {
    let d = distance_m.max(params.d0_m);
    let mut pl = params.pl0_db + 10.0 * params.exponent * (d / params.d0_m).log10();
    if params.shadow_sigma_db > 0.0 {
        if let Some(rng) = rng {
            let normal = Normal::new(0.0, params.shadow_sigma_db).unwrap();
            pl += normal.sample(rng);
        }
    }
    pl
}

/// Shannon capacity: rate = B log2(1 + snr).
pub fn achievable_rate_bps(snr_linear: f64, bandwidth_hz: f64) -> f64 {
    debug_assert!(snr_linear >= 0.0 && bandwidth_hz > 0.0);
    bandwidth_hz * (1.0 + snr_linear).log2()
}

/// Linear SNR at a receiver given tx power and total path loss.
pub fn snr_linear(tx_power_dbm: f64, path_loss_db: f64, noise_floor_dbm: f64) -> f64 {
    let snr_db = tx_power_dbm - path_loss_db - noise_floor_dbm;
    10f64.powf(snr_db / 10.0)
}

/// Sample whether the user swipes away (or the video ends) this slot.
///
/// Per-slot abandon hazard: h = h_min + (h_max - h_min) * (1 - pref[cat]).
/// Returns `Some(event)` when the hazard fires or the playhead reaches the
/// video length; the caller advances the playhead.
pub fn sample_swipe(
    user: &User,
    video: &Video,
    slot: u64,
    slot_duration: f64,
    params: &SwipeParams,
    rng: &mut RandomStream,
) -> Option<SwipeEvent> {
    let pref = user.preference[video.category];
    let hazard = params.h_min + (params.h_max - params.h_min) * (1.0 - pref);
    if rng.gen::<f64>() < hazard {
        return Some(SwipeEvent {
            user: user.id,
            slot,
            video: video.id,
            category: video.category,
            watched_duration: user.playhead.min(video.length_s),
            abandoned: true,
        });
    }
    if user.playhead + slot_duration >= video.length_s {
        return Some(SwipeEvent {
            user: user.id,
            slot,
            video: video.id,
            category: video.category,
            watched_duration: video.length_s,
            abandoned: false,
        });
    }
    None
}

/// Remap the preference vectors of a deterministic `fraction` of users.
/// Only preference fields change; positions, channels and buffers are
/// untouched.
pub fn inject_drift(users: &mut [User], spec: &DriftSpec, rng: &mut RandomStream) -> Vec<UserId> {
    let n = users.len();
    let count = ((spec.fraction * n as f64).round() as usize).min(n);
    // Deterministic selection: partial Fisher-Yates over user indices.
    let mut indices: Vec<usize> = (0..n).collect();
    for i in 0..count {
        let j = i + rng.gen_range(0..n - i);
        indices.swap(i, j);
    }
    let mut affected = Vec::with_capacity(count);
    for &idx in &indices[..count] {
        let user = &mut users[idx];
        match spec.remap {
            PreferenceRemap::Reverse => user.preference.reverse(),
            PreferenceRemap::Rotate => user.preference.rotate_right(1),
            PreferenceRemap::Resample => {
                let raw: Vec<f64> = (0..user.preference.len())
                    .map(|_| -rng.gen::<f64>().max(1e-12).ln())
                    .collect();
                let sum: f64 = raw.iter().sum();
                user.preference = raw.into_iter().map(|v| v / sum).collect();
            }
        }
        affected.push(user.id);
    }
    affected.sort_unstable();
    affected
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DeliveryOutcome {
    /// Minimum member rate over the allocated bandwidth.
    pub sustainable_rate_bps: f64,
    /// Seconds of video credited to every member's buffer.
    pub delivered_seconds: f64,
}

/// Multicast delivery to one group: the sustainable rate is the minimum
/// member's achievable rate over the allocated bandwidth, and each member's
/// buffer gains slot_duration * min(1, sustainable / bitrate) seconds.
pub fn multicast_deliver(
    group_id: usize,
    member_snrs: &[f64],
    bitrate_bps: f64,
    bandwidth_hz: f64,
    slot_duration: f64,
) -> Result<DeliveryOutcome> {
    if member_snrs.is_empty() {
        return Err(SimError::EmptyGroup(group_id));
    }
    let sustainable = member_snrs
        .iter()
        .map(|&snr| achievable_rate_bps(snr, bandwidth_hz))
        .fold(f64::INFINITY, f64::min);
    let fraction = if bitrate_bps <= 0.0 {
        0.0
    } else {
        (sustainable / bitrate_bps).min(1.0)
    };
    Ok(DeliveryOutcome {
        sustainable_rate_bps: sustainable,
        delivered_seconds: slot_duration * fraction,
    })
}
