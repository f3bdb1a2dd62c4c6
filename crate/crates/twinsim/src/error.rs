use thiserror::Error;

/// Errors surfaced by the simulator and its learners.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("scenario not found: {0}")]
    ScenarioNotFound(String),
    #[error("series too short: need at least {need} samples, got {got}")]
    SeriesTooShort { need: usize, got: usize },
    #[error("wrong window length: expected {expected}, got {got}")]
    WrongWindowLength { expected: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("degenerate dims: latent dim {m} must be >= 1 and < input dim {d}")]
    DegenerateDims { m: usize, d: usize },
    #[error("k out of range: k={k}, n={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("not a probability distribution: sums to {sum}")]
    NotADistribution { sum: f64 },
    #[error("out-of-order sample: slot {slot} precedes last record slot {last}")]
    OutOfOrderSample { slot: u64, last: u64 },
    #[error("unknown station: {0}")]
    UnknownStation(String),
    #[error("empty mirror: no snapshot to replay")]
    EmptyMirror,
    #[error("empty multicast group {0}")]
    EmptyGroup(usize),
    #[error("bad bins: edges must be strictly increasing")]
    BadBins,
    #[error("validation error at `{key}`: {msg}")]
    Validation { key: String, msg: String },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;
