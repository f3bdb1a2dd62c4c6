//! The digital twin layer: user twin stores and prediction, dual-error drift
//! detection, adaptive collection scheduling, tiered inference selection,
//! infrastructure mirroring, policy validation, and slice aggregation.

pub mod abstraction;
pub mod detector;
pub mod idt;
pub mod replay;
pub mod sdt;
pub mod tier;
pub mod udt;

pub use abstraction::{
    abstract_features, cohesion_score, latent_state, median_pairwise_distance,
    select_cluster_count, soft_assignment, swipe_distribution, AbstractionOutcome, LATENT_STATES,
};
pub use detector::{adjust_collection_period, labeled_error, unlabeled_error, DualErrorDetector};
pub use idt::{InfrastructureDigitalTwin, StationMirror, TrafficSummary, IDT_STATES, SPLIT_ACTIONS};
pub use replay::{validate_policy, ValidationReport};
pub use sdt::{SliceConfig, SliceDigitalTwin, QUOTA_ACTIONS, SDT_STATES};
pub use tier::{TaskClass, Tier, TierDecision, TierSelector};
pub use udt::{CollectedSample, RecordSource, StatusRecord, UdtConfig, UserDigitalTwin, STATUS_DIM};
