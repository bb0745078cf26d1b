//! Run manifest: a content-hashed ledger of every artifact a run produced.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    /// SHA-256 of the canonical config JSON driving the run.
    pub config_hash: String,
    pub created_unix: u64,
    pub updated_unix: u64,
    pub verbs_run: Vec<String>,
    /// Relative artifact path -> SHA-256 of its content.
    pub artifacts: BTreeMap<String, String>,
}

fn now_unix() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunManifest {
    pub fn new(config_hash: String) -> Self {
        let now = now_unix();
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash,
            created_unix: now,
            updated_unix: now,
            verbs_run: Vec::new(),
            artifacts: BTreeMap::new(),
        }
    }

    /// Loads the existing manifest in `out_dir`, or starts a fresh one. A
    /// manifest from a different config is replaced, not extended.
    pub fn load_or_new(out_dir: &Path, config_hash: &str) -> Self {
        let path = out_dir.join(MANIFEST_FILE);
        if let Ok(bytes) = std::fs::read(&path) {
            if let Ok(m) = serde_json::from_slice::<RunManifest>(&bytes) {
                if m.config_hash == config_hash {
                    return m;
                }
            }
        }
        RunManifest::new(config_hash.to_string())
    }

    /// Writes `bytes` atomically under `out_dir` and records the artifact.
    pub fn write_artifact(
        &mut self,
        out_dir: &Path,
        relative: &str,
        bytes: &[u8],
    ) -> Result<(), CliError> {
        sharpshooter::io::atomic_write(&out_dir.join(relative), bytes)?;
        self.artifacts
            .insert(relative.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn record_verb(&mut self, verb: &str) {
        self.verbs_run.push(verb.to_string());
        self.updated_unix = now_unix();
    }

    pub fn save(&self, out_dir: &Path) -> Result<(), CliError> {
        let bytes = serde_json::to_vec_pretty(self)
            .map_err(|e| CliError::Other(format!("manifest serialization: {e}")))?;
        sharpshooter::io::atomic_write(&out_dir.join(MANIFEST_FILE), &bytes)?;
        Ok(())
    }

    /// Checks that every listed artifact exists with its recorded hash.
    pub fn verify(&self, out_dir: &Path) -> Result<(), CliError> {
        for (rel, expected) in &self.artifacts {
            let path = out_dir.join(rel);
            let bytes = std::fs::read(&path).map_err(|_| {
                CliError::Prerequisite(format!("artifact missing: {}", path.display()))
            })?;
            let actual = sha256_hex(&bytes);
            if &actual != expected {
                return Err(CliError::Other(format!(
                    "artifact {} does not match its recorded hash",
                    path.display()
                )));
            }
        }
        Ok(())
    }
}
