//! Deterministic time-slotted simulator of a multi-tier access network
//! overlaid with a digital twin layer (user / infrastructure / slice twins),
//! with a multicast short-video streaming case study and an experiment
//! harness.

pub mod dt;
pub mod error;
pub mod harness;
pub mod learners;
pub mod msvs;
pub mod physnet;
pub mod rng;
pub mod sim;

pub use error::{Result, SimError};
