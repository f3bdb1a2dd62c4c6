//! Time-slotted simulation kernel: world clock, fixed phase ordering, seeded
//! per-purpose random streams, and report assembly.
//!
//! The kernel is strictly single-threaded per simulation instance. Phase
//! failures degrade: they are recorded as fault events and the slot
//! continues, so twin-side problems never halt delivery.

use crate::error::{Result, SimError};
use serde::{Deserialize, Serialize};

/// The fixed per-slot phase sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Phase {
    Collect,
    TwinPredict,
    Detect,
    Abstract,
    Operate,
    Slice,
    Deliver,
    Account,
}

pub const PHASE_ORDER: [Phase; 8] = [
    Phase::Collect,
    Phase::TwinPredict,
    Phase::Detect,
    Phase::Abstract,
    Phase::Operate,
    Phase::Slice,
    Phase::Deliver,
    Phase::Account,
];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    pub horizon: u64,
    pub slot_duration: f64,
    /// Large-timescale slicing period, in slots.
    pub slicing_period: u64,
    pub scenario_ref: String,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            horizon: 200,
            slot_duration: 1.0,
            slicing_period: 20,
            scenario_ref: "msvs".to_string(),
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(SimError::InvalidConfig("horizon must be >= 1".into()));
        }
        if !(self.slot_duration > 0.0) {
            return Err(SimError::InvalidConfig("slot_duration must be > 0".into()));
        }
        if self.slicing_period < 1 {
            return Err(SimError::InvalidConfig("slicing_period must be >= 1".into()));
        }
        Ok(())
    }
}

/// Everything that happened in one slot, in phase order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum SlotEvent {
    Drift { affected: usize },
    Collection { user: usize },
    TwinPrediction { user: usize, fallback: bool },
    Trigger { user: usize, labeled: f64, unlabeled: f64 },
    ModelUpdate { users: usize },
    Regroup { k: usize },
    PolicyValidated { phase: String, accepted: bool, gain: f64 },
    SliceReconfig { msvs_share: f64 },
    Delivery { group: usize, bitrate_bps: f64, delivered_s: f64 },
    Fault { phase: String, message: String },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SlotEvents {
    pub slot: u64,
    pub events: Vec<SlotEvent>,
}

/// One metrics row per simulated slot.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MetricsRow {
    pub slot: u64,
    pub mean_qoe: f64,
    pub triggers: u64,
    pub updates: u64,
    pub collections: u64,
    pub msvs_quota_hz: f64,
    pub mean_bitrate_bps: f64,
    pub rebuffer_s: f64,
    pub wasted_prefetch_s: f64,
    pub mean_buffer_s: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimReport {
    /// Echo of the configuration that produced this report.
    pub config_echo: String,
    pub rows: Vec<MetricsRow>,
    /// Per-user QoE trace, indexed [user][slot].
    pub qoe_traces: Vec<Vec<f64>>,
    pub event_log: Vec<SlotEvents>,
}

impl SimReport {
    pub fn mean_qoe(&self) -> f64 {
        if self.rows.is_empty() {
            return 0.0;
        }
        self.rows.iter().map(|r| r.mean_qoe).sum::<f64>() / self.rows.len() as f64
    }

    pub fn trigger_count(&self) -> u64 {
        self.rows.iter().map(|r| r.triggers).sum()
    }

    pub fn update_count(&self) -> u64 {
        self.rows.iter().map(|r| r.updates).sum()
    }

    /// Slots at which model-update events were logged.
    pub fn update_slots(&self) -> Vec<u64> {
        self.event_log
            .iter()
            .filter(|se| se.events.iter().any(|e| matches!(e, SlotEvent::ModelUpdate { .. })))
            .map(|se| se.slot)
            .collect()
    }
}

/// A scenario drives the world and twin layer through the eight phases.
pub trait SlotModel {
    /// Execute one phase of the current slot. Errors degrade to fault
    /// events.
    fn phase(&mut self, phase: Phase, slot: u64, events: &mut Vec<SlotEvent>) -> Result<()>;

    /// Metrics for the slot just finished; called after the account phase.
    fn metrics(&self, slot: u64) -> MetricsRow;

    /// Per-user QoE values for the slot just finished.
    fn slot_qoe(&self) -> &[f64];
}

/// Run the scenario named by `config.scenario_ref`.
pub fn run(
    config: &SimConfig,
    scenario: &crate::msvs::ScenarioConfig,
) -> Result<SimReport> {
    match config.scenario_ref.as_str() {
        "msvs" => crate::msvs::run_scenario(config, scenario),
        other => Err(SimError::ScenarioNotFound(other.to_string())),
    }
}

/// Drive `model` through `horizon` slots in the fixed phase order.
pub fn run_with_model<M: SlotModel>(config: &SimConfig, model: &mut M) -> Result<SimReport> {
    config.validate()?;
    let mut rows = Vec::with_capacity(config.horizon as usize);
    let mut event_log = Vec::with_capacity(config.horizon as usize);
    let mut qoe_traces: Vec<Vec<f64>> = Vec::new();
    for slot in 0..config.horizon {
        let mut events = Vec::new();
        for phase in PHASE_ORDER {
            if let Err(e) = model.phase(phase, slot, &mut events) {
                events.push(SlotEvent::Fault {
                    phase: format!("{phase:?}"),
                    message: e.to_string(),
                });
            }
        }
        let qoe = model.slot_qoe();
        if qoe_traces.is_empty() && !qoe.is_empty() {
            qoe_traces = vec![Vec::with_capacity(config.horizon as usize); qoe.len()];
        }
        for (trace, &value) in qoe_traces.iter_mut().zip(qoe) {
            trace.push(value);
        }
        rows.push(model.metrics(slot));
        event_log.push(SlotEvents { slot, events });
    }
    Ok(SimReport {
        config_echo: serde_json::to_string(config).map_err(|e| SimError::Parse(e.to_string()))?,
        rows,
        qoe_traces,
        event_log,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Counter {
        calls: Vec<Phase>,
        qoe: Vec<f64>,
    }

    impl SlotModel for Counter {
        fn phase(&mut self, phase: Phase, _slot: u64, events: &mut Vec<SlotEvent>) -> Result<()> {
            self.calls.push(phase);
            if phase == Phase::Operate {
                return Err(SimError::EmptyMirror);
            }
            if phase == Phase::Deliver {
                events.push(SlotEvent::Delivery {
                    group: 0,
                    bitrate_bps: 1.0,
                    delivered_s: 1.0,
                });
            }
            Ok(())
        }

        fn metrics(&self, slot: u64) -> MetricsRow {
            MetricsRow {
                slot,
                ..Default::default()
            }
        }

        fn slot_qoe(&self) -> &[f64] {
            &self.qoe
        }
    }

    #[test]
    fn horizon_zero_rejected() {
        let config = SimConfig {
            horizon: 0,
            ..Default::default()
        };
        assert!(matches!(
            config.validate(),
            Err(SimError::InvalidConfig(_))
        ));
    }

    #[test]
    fn phases_run_in_fixed_order_and_faults_degrade() {
        let config = SimConfig {
            horizon: 2,
            ..Default::default()
        };
        let mut model = Counter {
            calls: Vec::new(),
            qoe: vec![1.0],
        };
        let report = run_with_model(&config, &mut model).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert_eq!(model.calls.len(), 16);
        assert_eq!(&model.calls[..8], &PHASE_ORDER);
        // The operate fault was logged, and delivery still happened after it.
        let ev = &report.event_log[0].events;
        let fault_pos = ev
            .iter()
            .position(|e| matches!(e, SlotEvent::Fault { .. }))
            .unwrap();
        let delivery_pos = ev
            .iter()
            .position(|e| matches!(e, SlotEvent::Delivery { .. }))
            .unwrap();
        assert!(fault_pos < delivery_pos);
    }
}
