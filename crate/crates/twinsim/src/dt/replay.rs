//! Policy validation by internal replay.
//!
//! A candidate policy is deployed only after both candidate and incumbent
//! are replayed on a frozen copy of the twin state over the same virtual
//! trace; the candidate is accepted iff its mean simulated QoE is at least
//! the incumbent's (ties accept the candidate).

use crate::error::{Result, SimError};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ValidationReport {
    pub accepted: bool,
    pub candidate_qoe: f64,
    pub incumbent_qoe: f64,
    /// Predicted mean-QoE gain of the candidate over the incumbent.
    pub predicted_gain: f64,
}

/// Replay `candidate` and `incumbent` with the same deterministic replay
/// function on a frozen twin snapshot. `snapshots` is the number of mirrored
/// snapshots available; zero means there is nothing to replay against.
pub fn validate_policy<P, F>(
    snapshots: u64,
    candidate: &P,
    incumbent: &P,
    mut replay: F,
) -> Result<ValidationReport>
where
    F: FnMut(&P) -> f64,
{
    if snapshots == 0 {
        return Err(SimError::EmptyMirror);
    }
    let candidate_qoe = replay(candidate);
    let incumbent_qoe = replay(incumbent);
    Ok(ValidationReport {
        accepted: candidate_qoe >= incumbent_qoe,
        candidate_qoe,
        incumbent_qoe,
        predicted_gain: candidate_qoe - incumbent_qoe,
    })
}
