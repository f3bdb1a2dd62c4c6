//! Dual-error drift detection and adaptive collection scheduling.
//!
//! Labeled errors are MSEs between the twin's one-step forecast and the next
//! collected sample; unlabeled errors are entropies of the soft cluster
//! assignment of the twin's latent features. Both accumulate as running sums
//! that reset when either crosses its threshold.

use crate::error::{Result, SimError};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Mean of squared componentwise differences.
pub fn labeled_error(pred: &[f64], actual: &[f64]) -> Result<f64> {
    if pred.len() != actual.len() {
        return Err(SimError::DimMismatch {
            expected: pred.len(),
            got: actual.len(),
        });
    }
    let n = pred.len() as f64;
    Ok(pred
        .iter()
        .zip(actual)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n)
}

/// Shannon entropy in nats of an assignment probability vector, with
/// 0 ln 0 = 0.
pub fn unlabeled_error(assignment_probs: &[f64]) -> Result<f64> {
    let sum: f64 = assignment_probs.iter().sum();
    if (sum - 1.0).abs() > 1e-6 || assignment_probs.iter().any(|p| *p < 0.0) {
        return Err(SimError::NotADistribution { sum });
    }
    Ok(assignment_probs
        .iter()
        .filter(|p| **p > 0.0)
        .map(|p| -p * p.ln())
        .sum())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualErrorDetector {
    labeled_acc: f64,
    unlabeled_acc: f64,
    pub theta_labeled: f64,
    pub theta_unlabeled: f64,
    /// Recent labeled errors, used by the collection scheduler.
    window: VecDeque<f64>,
    window_cap: usize,
}

impl DualErrorDetector {
    pub fn new(theta_labeled: f64, theta_unlabeled: f64) -> Self {
        Self {
            labeled_acc: 0.0,
            unlabeled_acc: 0.0,
            theta_labeled,
            theta_unlabeled,
            window: VecDeque::new(),
            window_cap: 16,
        }
    }

    pub fn accumulators(&self) -> (f64, f64) {
        (self.labeled_acc, self.unlabeled_acc)
    }

    /// Add errors to the accumulators. Returns true when either running sum
    /// strictly exceeds its threshold; both accumulators reset to zero on a
    /// trigger.
    pub fn accumulate(&mut self, labeled: Option<f64>, unlabeled: Option<f64>) -> bool {
        debug_assert!(labeled.is_some() || unlabeled.is_some());
        if let Some(e) = labeled {
            debug_assert!(e >= 0.0);
            self.labeled_acc += e;
            if self.window.len() == self.window_cap {
                self.window.pop_front();
            }
            self.window.push_back(e);
        }
        if let Some(e) = unlabeled {
            debug_assert!(e >= 0.0);
            self.unlabeled_acc += e;
        }
        let triggered =
            self.labeled_acc > self.theta_labeled || self.unlabeled_acc > self.theta_unlabeled;
        if triggered {
            self.labeled_acc = 0.0;
            self.unlabeled_acc = 0.0;
        }
        triggered
    }

    /// Mean of the recent labeled-error window; None before any labeled error.
    pub fn recent_mse(&self) -> Option<f64> {
        if self.window.is_empty() {
            return None;
        }
        Some(self.window.iter().sum::<f64>() / self.window.len() as f64)
    }
}

/// Collection-period control: halve when the recent error is high, double
/// when it is low, clamp to [p_min, p_max].
pub fn adjust_collection_period(
    period: u64,
    recent_mse: f64,
    theta_hi: f64,
    theta_lo: f64,
    p_min: u64,
    p_max: u64,
) -> u64 {
    let next = if recent_mse > theta_hi {
        period / 2
    } else if recent_mse < theta_lo {
        period.saturating_mul(2)
    } else {
        period
    };
    next.clamp(p_min, p_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mse_trivial_values() {
        assert_eq!(labeled_error(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(labeled_error(&[1.0, 2.0], &[0.0, 2.0]).unwrap(), 0.5);
        assert_eq!(labeled_error(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 12.5);
    }

    #[test]
    fn mse_is_symmetric() {
        let a = [0.3, -1.2, 4.0];
        let b = [1.1, 0.0, -2.0];
        assert_eq!(labeled_error(&a, &b).unwrap(), labeled_error(&b, &a).unwrap());
    }

    #[test]
    fn mse_dim_mismatch_rejected() {
        assert!(matches!(
            labeled_error(&[1.0], &[1.0, 2.0]),
            Err(SimError::DimMismatch { .. })
        ));
    }

    #[test]
    fn entropy_trivial_values() {
        assert_eq!(unlabeled_error(&[1.0, 0.0, 0.0]).unwrap(), 0.0);
        let h2 = unlabeled_error(&[0.5, 0.5]).unwrap();
        assert!((h2 - std::f64::consts::LN_2).abs() < 1e-12);
        let h4 = unlabeled_error(&[0.25; 4]).unwrap();
        assert!((h4 - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn entropy_rejects_non_distribution() {
        assert!(matches!(
            unlabeled_error(&[0.5, 0.2]),
            Err(SimError::NotADistribution { .. })
        ));
    }

    #[test]
    fn labeled_trigger_arithmetic() {
        let mut det = DualErrorDetector::new(1.0, 100.0);
        assert!(!det.accumulate(Some(0.4), None));
        assert!(!det.accumulate(Some(0.4), None));
        // 1.2 > 1.0 fires on the third accumulation, then resets.
        assert!(det.accumulate(Some(0.4), None));
        assert_eq!(det.accumulators(), (0.0, 0.0));
    }

    #[test]
    fn zero_errors_never_trigger() {
        let mut det = DualErrorDetector::new(1.0, 1.0);
        for _ in 0..10_000 {
            assert!(!det.accumulate(Some(0.0), Some(0.0)));
        }
    }

    #[test]
    fn entropy_trigger_at_sixth_accumulation() {
        let k = 4f64;
        let mut det = DualErrorDetector::new(f64::INFINITY, 5.0 * k.ln());
        for i in 0..5 {
            assert!(!det.accumulate(None, Some(k.ln())), "fired at {i}");
        }
        assert!(det.accumulate(None, Some(k.ln())));
    }

    #[test]
    fn period_rules() {
        assert_eq!(adjust_collection_period(8, 0.5, 0.2, 0.02, 1, 32), 4);
        assert_eq!(adjust_collection_period(32, 0.001, 0.2, 0.02, 1, 32), 32);
        assert_eq!(adjust_collection_period(8, 0.1, 0.2, 0.02, 1, 32), 8);
        assert_eq!(adjust_collection_period(1, 0.5, 0.2, 0.02, 1, 32), 1);
    }

    /// Exhaustive halving/doubling/clamping table over period 1..=32.
    #[test]
    fn period_table_exhaustive() {
        let (p_min, p_max) = (1u64, 32u64);
        for period in p_min..=p_max {
            let high = adjust_collection_period(period, 1.0, 0.2, 0.02, p_min, p_max);
            assert_eq!(high, (period / 2).clamp(p_min, p_max));
            let low = adjust_collection_period(period, 0.0, 0.2, 0.02, p_min, p_max);
            assert_eq!(low, (period * 2).clamp(p_min, p_max));
            let mid = adjust_collection_period(period, 0.1, 0.2, 0.02, p_min, p_max);
            assert_eq!(mid, period);
        }
    }
}
