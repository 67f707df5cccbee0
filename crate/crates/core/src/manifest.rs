//! Run manifests: per-command artifact inventories with checksums, so a
//! later pipeline stage can detect stale or tampered inputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::hex_string;
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Inventory of a run directory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub tool_version: String,
    /// Unix timestamps of command completions, keyed by command name.
    pub timestamps: BTreeMap<String, u64>,
    /// Relative artifact path -> sha256 hex digest.
    pub files: BTreeMap<String, String>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path)?;
    let mut hasher = Sha256::new();
    hasher.update(&bytes);
    Ok(hex_string(&hasher.finalize()))
}

impl RunManifest {
    pub fn path_in(dir: &Path) -> PathBuf {
        dir.join(MANIFEST_FILE)
    }

    /// Load the manifest from a run directory, or start a fresh one.
    pub fn load_or_new(dir: &Path, config_hash: &str) -> Result<RunManifest> {
        let path = Self::path_in(dir);
        if path.exists() {
            let manifest: RunManifest = crate::dataset::read_json(&path)?;
            Ok(manifest)
        } else {
            Ok(RunManifest {
                config_hash: config_hash.to_string(),
                tool_version: env!("CARGO_PKG_VERSION").to_string(),
                ..RunManifest::default()
            })
        }
    }

    /// Record a command completion and the artifacts it produced.
    pub fn record(&mut self, dir: &Path, command: &str, artifacts: &[PathBuf]) -> Result<()> {
        for artifact in artifacts {
            let rel = artifact
                .strip_prefix(dir)
                .unwrap_or(artifact)
                .to_string_lossy()
                .to_string();
            self.files.insert(rel, sha256_file(artifact)?);
        }
        let now = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        self.timestamps.insert(command.to_string(), now);
        Ok(())
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        crate::dataset::write_json(&Self::path_in(dir), self)
    }

    /// Verify that a recorded input still matches its checksum. Unknown
    /// files pass (they were produced outside this manifest's scope).
    pub fn verify(&self, dir: &Path, artifact: &Path) -> Result<()> {
        let rel = artifact
            .strip_prefix(dir)
            .unwrap_or(artifact)
            .to_string_lossy()
            .to_string();
        if let Some(expected) = self.files.get(&rel) {
            let actual = sha256_file(artifact)?;
            if &actual != expected {
                return Err(Error::StaleInput(rel));
            }
        }
        Ok(())
    }
}
