//! Per-user digital twin: mirrored status records, one-step status
//! prediction, dual-error detection, and adaptive collection scheduling.
//!
//! Exactly one status record exists per elapsed slot. Records at collection
//! slots mirror the physical state bit-exactly with source `Collected`;
//! all other slots carry `Predicted` records produced by the twin's
//! predictor (or a last-value hold before enough history exists).

use crate::dt::detector::{labeled_error, DualErrorDetector};
use crate::error::{Result, SimError};
use crate::learners::{PredictorHyper, SequencePredictor};
use crate::rng::RandomStream;
use serde::{Deserialize, Serialize};

/// Networking + behavior status vector layout:
/// [pos_x, pos_y, channel_gain_db, watched_fraction].
pub const STATUS_DIM: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecordSource {
    Collected,
    Predicted {
        /// True when produced by last-value hold instead of the predictor.
        fallback: bool,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatusRecord {
    pub slot: u64,
    pub source: RecordSource,
    pub status: Vec<f64>,
    /// Twin-side preference estimate; sums to 1.
    pub preference: Vec<f64>,
}

/// One physical-side observation delivered to the twin at a collection slot.
#[derive(Debug, Clone)]
pub struct CollectedSample {
    pub status: Vec<f64>,
    /// (category, watched fraction) per swipe observed since last collection.
    pub swipes: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct UdtConfig {
    pub theta_labeled: f64,
    pub theta_unlabeled: f64,
    pub initial_period: u64,
    pub p_min: u64,
    pub p_max: u64,
    pub period_theta_hi: f64,
    pub period_theta_lo: f64,
    /// EMA step for the per-category engagement estimate.
    pub engagement_step: f64,
}

impl Default for UdtConfig {
    fn default() -> Self {
        Self {
            theta_labeled: 1.0,
            theta_unlabeled: 5.0 * 6f64.ln(),
            initial_period: 8,
            p_min: 1,
            p_max: 32,
            period_theta_hi: 0.2,
            period_theta_lo: 0.02,
            engagement_step: 0.3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct UserDigitalTwin {
    pub user_id: usize,
    pub records: Vec<StatusRecord>,
    pub predictor: Option<SequencePredictor>,
    pub detector: DualErrorDetector,
    pub collection_period: u64,
    pub last_collection_slot: Option<u64>,
    config: UdtConfig,
    /// Per-category engagement EMA backing the preference estimate.
    engagement: Vec<f64>,
    /// Forecast made last slot for the upcoming slot.
    pending_forecast: Option<(u64, Vec<f64>)>,
    /// Labeled error produced by the latest ingest, consumed by the detect
    /// phase.
    pub pending_labeled: Option<f64>,
}

impl UserDigitalTwin {
    pub fn new(user_id: usize, categories: usize, config: UdtConfig) -> Self {
        Self {
            user_id,
            records: Vec::new(),
            predictor: None,
            detector: DualErrorDetector::new(config.theta_labeled, config.theta_unlabeled),
            collection_period: config.initial_period,
            last_collection_slot: None,
            config,
            engagement: vec![0.5; categories],
            pending_forecast: None,
            pending_labeled: None,
        }
    }

    pub fn preference_estimate(&self) -> Vec<f64> {
        let sum: f64 = self.engagement.iter().sum();
        self.engagement.iter().map(|e| e / sum).collect()
    }

    /// Whether `slot` is a scheduled collection instant.
    pub fn collection_due(&self, slot: u64) -> bool {
        match self.last_collection_slot {
            None => true,
            Some(last) => slot >= last + self.collection_period,
        }
    }

    /// Mirror a collected sample. Returns the labeled error against the
    /// twin's prior forecast for this slot, when one exists.
    pub fn ingest(&mut self, slot: u64, sample: CollectedSample) -> Result<Option<f64>> {
        if let Some(last) = self.records.last() {
            if slot <= last.slot {
                return Err(SimError::OutOfOrderSample {
                    slot,
                    last: last.slot,
                });
            }
        }
        for (cat, frac) in &sample.swipes {
            let e = &mut self.engagement[*cat];
            *e = (1.0 - self.config.engagement_step) * *e + self.config.engagement_step * frac;
        }
        let mse = match &self.pending_forecast {
            Some((fslot, forecast)) if *fslot == slot => {
                Some(labeled_error(forecast, &sample.status)?)
            }
            _ => None,
        };
        self.pending_labeled = mse;
        self.records.push(StatusRecord {
            slot,
            source: RecordSource::Collected,
            status: sample.status,
            preference: self.preference_estimate(),
        });
        self.last_collection_slot = Some(slot);
        Ok(mse)
    }

    /// Fill `slot` with a predicted record. Falls back to a last-value hold
    /// when the predictor is missing or history is shorter than its window.
    pub fn emulate(&mut self, slot: u64) -> Result<&StatusRecord> {
        if let Some(last) = self.records.last() {
            if slot <= last.slot {
                return Err(SimError::OutOfOrderSample {
                    slot,
                    last: last.slot,
                });
            }
        }
        let (status, fallback) = self.predict_status();
        self.records.push(StatusRecord {
            slot,
            source: RecordSource::Predicted { fallback },
            status,
            preference: self.preference_estimate(),
        });
        Ok(self.records.last().unwrap())
    }

    fn predict_status(&self) -> (Vec<f64>, bool) {
        if let Some(p) = &self.predictor {
            let w = p.window();
            if self.records.len() >= w {
                let window: Vec<Vec<f64>> = self.records[self.records.len() - w..]
                    .iter()
                    .map(|r| r.status.clone())
                    .collect();
                if let Ok(pred) = p.predict_next(&window) {
                    return (pred, false);
                }
            }
        }
        // Last-value hold.
        let status = self
            .records
            .last()
            .map(|r| r.status.clone())
            .unwrap_or_else(|| vec![0.0; STATUS_DIM]);
        (status, true)
    }

    /// Produce and remember the forecast for the next slot; the next ingest
    /// at that slot scores it.
    pub fn forecast_next(&mut self, next_slot: u64) {
        let (status, _) = self.predict_status();
        self.pending_forecast = Some((next_slot, status));
    }

    /// Train a fresh predictor on the full status history.
    pub fn train_predictor(&mut self, hyper: PredictorHyper, rng: &mut RandomStream) -> Result<()> {
        let series: Vec<Vec<f64>> = self.records.iter().map(|r| r.status.clone()).collect();
        self.predictor = Some(SequencePredictor::train(&series, STATUS_DIM, hyper, rng)?);
        Ok(())
    }

    /// Incremental model update on the most recent `span` records.
    pub fn update_predictor(&mut self, span: usize) -> Result<()> {
        let p = self.predictor.as_mut().ok_or(SimError::SeriesTooShort {
            need: 1,
            got: 0,
        })?;
        let start = self.records.len().saturating_sub(span);
        let series: Vec<Vec<f64>> = self.records[start..]
            .iter()
            .map(|r| r.status.clone())
            .collect();
        p.incremental_update(&series)
    }

    /// Recent mean labeled error, and period adjustment at detector
    /// evaluation instants.
    pub fn adjust_period(&mut self) {
        if let Some(mse) = self.detector.recent_mse() {
            self.collection_period = super::detector::adjust_collection_period(
                self.collection_period,
                mse,
                self.config.period_theta_hi,
                self.config.period_theta_lo,
                self.config.p_min,
                self.config.p_max,
            );
        }
    }

    /// Behavior feature vector over the trailing `w` records: preference
    /// estimate followed by the mean watched fraction.
    pub fn behavior_features(&self, w: usize) -> Option<Vec<f64>> {
        if self.records.len() < w {
            return None;
        }
        let tail = &self.records[self.records.len() - w..];
        let mut features = tail.last().unwrap().preference.clone();
        let mean_watch =
            tail.iter().map(|r| r.status[3]).sum::<f64>() / w as f64;
        features.push(mean_watch);
        Some(features)
    }

    /// Export the status history as structured text, one record per line.
    pub fn export_records(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }
}
