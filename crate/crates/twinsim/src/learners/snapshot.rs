//! Versioned structured-text snapshots of learner models.
//!
//! Snapshots carry a format version and a kind tag so a load can reject
//! incompatible files instead of deserializing garbage.

use crate::error::{Result, SimError};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct Envelope<T> {
    format_version: u32,
    kind: String,
    model: T,
}

/// Serialize a model into the versioned text snapshot format.
pub fn to_snapshot<T: Serialize>(kind: &str, model: &T) -> Result<String> {
    let env = Envelope {
        format_version: FORMAT_VERSION,
        kind: kind.to_string(),
        model,
    };
    serde_json::to_string_pretty(&env).map_err(|e| SimError::Parse(e.to_string()))
}

/// Deserialize a model from a snapshot, checking version and kind.
pub fn from_snapshot<T: DeserializeOwned>(kind: &str, text: &str) -> Result<T> {
    let env: Envelope<T> =
        serde_json::from_str(text).map_err(|e| SimError::Parse(e.to_string()))?;
    if env.format_version != FORMAT_VERSION {
        return Err(SimError::Parse(format!(
            "unsupported snapshot version {}",
            env.format_version
        )));
    }
    if env.kind != kind {
        return Err(SimError::Parse(format!(
            "snapshot kind mismatch: expected {kind}, got {}",
            env.kind
        )));
    }
    Ok(env.model)
}
