//! Run manifests: every command that writes outputs also writes a manifest
//! holding the fully resolved configuration, so any run can be reproduced
//! byte for byte from the manifest alone.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use qsd::output::write_json_file;
use qsd::schemes::SchemeConfig;
use qsd::{QsdError, Result};

use crate::config::ChainDescriptor;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub config_path: String,
    pub chain: ChainDescriptor,
    pub resolved: ResolvedRun,
    pub outputs: Vec<String>,
    /// Wall-clock stamp (unix seconds); informational, not reproduced.
    pub wall_clock_unix: u64,
    pub duration_secs: f64,
}

/// Everything the engines need, after all drawing and defaulting.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolvedRun {
    pub master_seed: u64,
    pub replications: u32,
    pub parallelism: usize,
    pub scheme_config: SchemeConfig,
    /// Initial-state multiset shared by the replications (single-particle
    /// schemes rotate through it round-robin).
    pub initial_multiset: Vec<usize>,
}

impl RunManifest {
    pub fn new(command: &str, config_path: &str, chain: ChainDescriptor, resolved: ResolvedRun) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_path: config_path.to_string(),
            chain,
            resolved,
            outputs: Vec::new(),
            wall_clock_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            duration_secs: 0.0,
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        write_json_file(&dir.join("manifest.json"), self)
    }

    pub fn load(path: &str) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| QsdError::Config(format!("manifest parse: {e}")))
    }
}
