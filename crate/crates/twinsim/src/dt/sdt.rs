//! Slice digital twin: aggregated per-slice demand, the slicing agent, and
//! the satisfaction statistic.

use crate::learners::QAgent;
use crate::rng::RandomStream;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Slice quota actions: MSVS-slice share of the total bandwidth. The
/// background slice receives the remainder, so quotas always sum to the
/// total.
pub const QUOTA_ACTIONS: [f64; 7] = [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];

/// Demand-ratio state buckets (MSVS demand over total demand, quantized).
pub const SDT_STATES: usize = 8;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SliceConfig {
    pub msvs_quota_hz: f64,
    pub background_quota_hz: f64,
}

#[derive(Debug, Clone)]
pub struct SliceDigitalTwin {
    pub total_bandwidth_hz: f64,
    pub agent: QAgent,
    pub current: SliceConfig,
    /// Trailing per-slot mean QoE of the MSVS slice.
    recent_qoe: VecDeque<f64>,
    satisfaction_window: usize,
    pub snapshots: u64,
}

impl SliceDigitalTwin {
    pub fn new(total_bandwidth_hz: f64, initial_msvs_share: f64, agent: QAgent) -> Self {
        Self {
            total_bandwidth_hz,
            agent,
            current: SliceConfig {
                msvs_quota_hz: total_bandwidth_hz * initial_msvs_share,
                background_quota_hz: total_bandwidth_hz * (1.0 - initial_msvs_share),
            },
            recent_qoe: VecDeque::new(),
            satisfaction_window: 20,
            snapshots: 0,
        }
    }

    pub fn record_qoe(&mut self, mean_qoe: f64) {
        if self.recent_qoe.len() == self.satisfaction_window {
            self.recent_qoe.pop_front();
        }
        self.recent_qoe.push_back(mean_qoe);
        self.snapshots += 1;
    }

    /// Trailing mean QoE of the MSVS slice, the scalar the quota agent
    /// reads as slice satisfaction.
    pub fn satisfaction(&self) -> f64 {
        if self.recent_qoe.is_empty() {
            return 0.0;
        }
        self.recent_qoe.iter().sum::<f64>() / self.recent_qoe.len() as f64
    }

    /// Quantized demand state from per-slice aggregate demand.
    pub fn demand_state(&self, msvs_demand: f64, background_demand: f64) -> usize {
        let total = msvs_demand + background_demand;
        if total <= 0.0 {
            return SDT_STATES / 2;
        }
        let share = msvs_demand / total;
        ((share * SDT_STATES as f64) as usize).min(SDT_STATES - 1)
    }

    /// Epsilon-greedy quota proposal for the given demand state. Quotas sum
    /// to the total bandwidth by construction.
    pub fn propose_quota(&self, state: usize, rng: &mut RandomStream) -> (usize, SliceConfig) {
        let action = self.agent.select_action(state, rng);
        (action, self.config_for_action(action))
    }

    pub fn config_for_action(&self, action: usize) -> SliceConfig {
        let share = QUOTA_ACTIONS[action];
        SliceConfig {
            msvs_quota_hz: self.total_bandwidth_hz * share,
            background_quota_hz: self.total_bandwidth_hz * (1.0 - share),
        }
    }

    pub fn apply(&mut self, config: SliceConfig) {
        self.current = config;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_stream;

    fn sdt() -> SliceDigitalTwin {
        let agent = QAgent::new(SDT_STATES, QUOTA_ACTIONS.len(), 0.0, 0.2, 0.9);
        SliceDigitalTwin::new(2.0e6, 0.5, agent)
    }

    #[test]
    fn quotas_sum_to_total() {
        let twin = sdt();
        for action in 0..QUOTA_ACTIONS.len() {
            let cfg = twin.config_for_action(action);
            assert!(
                (cfg.msvs_quota_hz + cfg.background_quota_hz - 2.0e6).abs() < 1e-6,
                "action {action}"
            );
        }
    }

    #[test]
    fn dominant_q_entry_always_chosen() {
        let mut twin = sdt();
        let mut rng = rng_stream(1, "agent-explore");
        twin.agent.update(3, 5, 10.0, 3, &mut rng);
        twin.agent.update(3, 5, 10.0, 3, &mut rng);
        for _ in 0..50 {
            let (action, _) = twin.propose_quota(3, &mut rng);
            assert_eq!(action, 5);
        }
    }

    #[test]
    fn satisfaction_is_trailing_mean() {
        let mut twin = sdt();
        for i in 0..30 {
            twin.record_qoe(i as f64);
        }
        // Last 20 values: 10..29, mean 19.5.
        assert!((twin.satisfaction() - 19.5).abs() < 1e-12);
    }

    #[test]
    fn demand_state_buckets() {
        let twin = sdt();
        assert_eq!(twin.demand_state(0.0, 0.0), SDT_STATES / 2);
        assert_eq!(twin.demand_state(1.0, 0.0), SDT_STATES - 1);
        assert_eq!(twin.demand_state(0.0, 1.0), 0);
    }
}
