//! Per-user, per-slot quality-of-experience accounting.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct QoeWeights {
    /// Bitrate utility weight.
    pub alpha: f64,
    /// Rebuffering penalty per stalled second.
    pub beta: f64,
    /// Quality-switch penalty weight.
    pub gamma: f64,
    /// Wasted-prefetch penalty per discarded second.
    pub delta: f64,
}

impl Default for QoeWeights {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 2.0,
            gamma: 0.5,
            delta: 0.1,
        }
    }
}

impl QoeWeights {
    pub fn validate(&self) -> bool {
        self.alpha >= 0.0 && self.beta >= 0.0 && self.gamma >= 0.0 && self.delta >= 0.0
    }
}

/// Logged components of one user-slot; the scalar QoE is their weighted
/// recombination.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct QoeComponents {
    /// Effective playback bitrate this slot; 0 for a fully stalled slot.
    pub bitrate_bps: f64,
    /// Playback bitrate of the previous slot, for the switch penalty.
    pub prev_bitrate_bps: f64,
    pub rebuffer_s: f64,
    pub wasted_prefetch_s: f64,
}

/// Magnitude of the quality switch between consecutive slots. Stalled slots
/// (zero bitrate on either side) do not count as switches.
pub fn switch_magnitude(bitrate_bps: f64, prev_bitrate_bps: f64) -> f64 {
    if bitrate_bps <= 0.0 || prev_bitrate_bps <= 0.0 {
        0.0
    } else {
        (bitrate_bps / prev_bitrate_bps).ln().abs()
    }
}

/// QoE = alpha*ln(1 + bitrate/bitrate_min) - beta*rebuffer
///       - gamma*|ln(b_t/b_{t-1})| - delta*waste.
pub fn qoe_slot(c: &QoeComponents, w: &QoeWeights, bitrate_min_bps: f64) -> f64 {
    debug_assert!(bitrate_min_bps > 0.0);
    let utility = if c.bitrate_bps > 0.0 {
        w.alpha * (1.0 + c.bitrate_bps / bitrate_min_bps).ln()
    } else {
        0.0
    };
    utility
        - w.beta * c.rebuffer_s
        - w.gamma * switch_magnitude(c.bitrate_bps, c.prev_bitrate_bps)
        - w.delta * c.wasted_prefetch_s
}
