//! Multicast short-video streaming case study: QoE accounting, multicast
//! grouping and 3C planning, twin-snapshot policy replay, and the scenario
//! driving the full twin layer.

pub mod plan;
pub mod qoe;
pub mod scenario;
pub mod snapshot;

pub use plan::{
    estimated_group_score, finalize_plan, plan_3c, prefetch_depth, regroup, GroupPlan,
    MulticastGroup, Plan3C,
};
pub use qoe::{qoe_slot, switch_magnitude, QoeComponents, QoeWeights};
pub use scenario::{
    run_hier_drl_baseline, run_scenario, MsvsScenario, ScenarioConfig, Scheme,
};
pub use snapshot::{replay_policy, ReplayPolicy, SnapshotGroup, TwinSnapshot};
