//! Adaptive inference tier selection: lightweight models for routine work,
//! heavyweight models only when the recent error justifies the cost and the
//! per-slot compute budget allows it.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Hash)]
#[serde(rename_all = "kebab-case")]
pub enum TaskClass {
    StatusFill,
    FeatureAbstraction,
    PolicySynthesis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tier {
    Light,
    Heavy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierDecision {
    pub tier: Tier,
    /// Heavy was warranted but the budget was exhausted.
    pub budget_deferred: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TierEntry {
    pub error_threshold: f64,
    pub light_cost: f64,
    pub heavy_cost: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TierSelector {
    pub status_fill: TierEntry,
    pub feature_abstraction: TierEntry,
    pub policy_synthesis: TierEntry,
    pub budget_per_slot: f64,
    spent: f64,
}

impl Default for TierSelector {
    fn default() -> Self {
        Self {
            status_fill: TierEntry {
                error_threshold: 0.2,
                light_cost: 1.0,
                heavy_cost: 4.0,
            },
            feature_abstraction: TierEntry {
                error_threshold: 0.5,
                light_cost: 1.0,
                heavy_cost: 6.0,
            },
            policy_synthesis: TierEntry {
                error_threshold: 0.5,
                light_cost: 1.0,
                heavy_cost: 6.0,
            },
            budget_per_slot: 16.0,
            spent: 0.0,
        }
    }
}

impl TierSelector {
    fn entry(&self, class: TaskClass) -> TierEntry {
        match class {
            TaskClass::StatusFill => self.status_fill,
            TaskClass::FeatureAbstraction => self.feature_abstraction,
            TaskClass::PolicySynthesis => self.policy_synthesis,
        }
    }

    /// Reset the per-slot budget at a slot boundary.
    pub fn start_slot(&mut self) {
        self.spent = 0.0;
    }

    pub fn remaining_budget(&self) -> f64 {
        self.budget_per_slot - self.spent
    }

    /// Heavy tier iff the recent error exceeds the class threshold and the
    /// remaining budget covers the heavy cost; light otherwise, flagged
    /// `budget_deferred` when only the budget stood in the way.
    pub fn select_inference_tier(&mut self, class: TaskClass, recent_error: f64) -> TierDecision {
        let entry = self.entry(class);
        let wants_heavy = recent_error > entry.error_threshold;
        if wants_heavy && self.spent + entry.heavy_cost <= self.budget_per_slot {
            self.spent += entry.heavy_cost;
            return TierDecision {
                tier: Tier::Heavy,
                budget_deferred: false,
            };
        }
        self.spent += entry.light_cost;
        TierDecision {
            tier: Tier::Light,
            budget_deferred: wants_heavy,
        }
    }
}
