//! Infrastructure digital twin: topology mirror, per-station load history,
//! traffic pattern summaries, and the operation agent.

use crate::error::{Result, SimError};
use crate::learners::QAgent;
use crate::physnet::StationId;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StationMirror {
    pub station: StationId,
    pub bandwidth_hz: f64,
    pub load_history: VecDeque<f64>,
    pub summary: TrafficSummary,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct TrafficSummary {
    pub mean: f64,
    pub peak: f64,
    /// Least-squares slope of load over the history window.
    pub trend: f64,
}

#[derive(Debug, Clone)]
pub struct InfrastructureDigitalTwin {
    pub stations: Vec<StationMirror>,
    pub window: usize,
    /// Operation agent over quantized load states x bandwidth-split actions.
    pub agent: QAgent,
    /// Slots at which mirror reports arrived; replay requires at least one.
    pub snapshots: u64,
}

/// Load-ratio state buckets for the operation agent (2-station case:
/// station 0 share of total load, quantized).
pub const IDT_STATES: usize = 8;

/// Bandwidth-split actions: station 0 share of the slice quota.
pub const SPLIT_ACTIONS: [f64; 5] = [0.2, 0.35, 0.5, 0.65, 0.8];

impl InfrastructureDigitalTwin {
    pub fn new(stations: &[(StationId, f64)], window: usize, agent: QAgent) -> Self {
        Self {
            stations: stations
                .iter()
                .map(|&(station, bandwidth_hz)| StationMirror {
                    station,
                    bandwidth_hz,
                    load_history: VecDeque::new(),
                    summary: TrafficSummary::default(),
                })
                .collect(),
            window,
            agent,
            snapshots: 0,
        }
    }

    /// Mirror a per-station load report for this slot and refresh the
    /// traffic summaries.
    pub fn mirror_update(&mut self, report: &[(StationId, f64)]) -> Result<()> {
        for &(station, load) in report {
            let mirror = self
                .stations
                .iter_mut()
                .find(|m| m.station == station)
                .ok_or_else(|| SimError::UnknownStation(station.to_string()))?;
            if mirror.load_history.len() == self.window {
                mirror.load_history.pop_front();
            }
            mirror.load_history.push_back(load);
            mirror.summary = summarize(mirror.load_history.make_contiguous());
        }
        self.snapshots += 1;
        Ok(())
    }

    /// Quantized load state: station 0 share of total mirrored load.
    pub fn load_state(&self) -> usize {
        let loads: Vec<f64> = self
            .stations
            .iter()
            .map(|m| m.load_history.back().copied().unwrap_or(0.0))
            .collect();
        let total: f64 = loads.iter().sum();
        if total <= 0.0 {
            return IDT_STATES / 2;
        }
        let share = loads[0] / total;
        ((share * IDT_STATES as f64) as usize).min(IDT_STATES - 1)
    }
}

fn summarize(history: &[f64]) -> TrafficSummary {
    let n = history.len();
    if n == 0 {
        return TrafficSummary::default();
    }
    let mean = history.iter().sum::<f64>() / n as f64;
    let peak = history.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let trend = if n < 2 {
        0.0
    } else {
        // Least squares of load against slot offset 0..n.
        let tx = (n as f64 - 1.0) / 2.0;
        let mut num = 0.0;
        let mut den = 0.0;
        for (i, &y) in history.iter().enumerate() {
            let dx = i as f64 - tx;
            num += dx * (y - mean);
            den += dx * dx;
        }
        num / den
    };
    TrafficSummary { mean, peak, trend }
}
