use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::commands::Resolved;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Phase {
    pub name: String,
    pub seconds: f64,
}

/// Everything needed to re-run a command. `resolved` holds the full
/// parameter set after config files, flags and defaults were merged.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub seed: Option<u64>,
    pub hash_algorithm: String,
    pub workers: usize,
    pub created_unix_seconds: u64,
    pub phases: Vec<Phase>,
    pub outputs: Vec<OutputFile>,
    pub resolved: Resolved,
}

impl Manifest {
    pub fn new(resolved: Resolved, workers: usize, phases: Vec<Phase>, outputs: Vec<OutputFile>) -> Self {
        Self {
            command: resolved.name().to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: resolved.seed(),
            hash_algorithm: kfca_core::commit::HASH_ALGORITHM.to_string(),
            workers,
            created_unix_seconds: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            phases,
            outputs,
            resolved,
        }
    }
}
