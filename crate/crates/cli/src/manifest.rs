//! Run manifest: config echo, seeds, timestamps and a checksummed file inventory.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use phopfield_core::analysis::dynamics_seed;
use phopfield_core::seed::{derive_seed, TAG_LAMBDA, TAG_MATRIX};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSeeds {
    pub sample: usize,
    pub matrix_seed: u64,
    pub lambda_seed: u64,
    /// Exchange Monte Carlo seed, one per α of the run (a single entry for `run`).
    pub dynamics_seeds: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub artifact_version: String,
    pub command: String,
    pub config: RunConfig,
    pub samples: Vec<SampleSeeds>,
    pub started_at: String,
    pub finished_at: Option<String>,
    pub completed_samples: Vec<usize>,
    pub files: BTreeMap<String, FileEntry>,
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig, n_alphas: usize) -> Self {
        let seed = config.master_seed;
        let samples = (0..config.n_samples)
            .map(|s| SampleSeeds {
                sample: s,
                matrix_seed: derive_seed(seed, &[TAG_MATRIX, s as u64]),
                lambda_seed: derive_seed(seed, &[TAG_LAMBDA, s as u64]),
                dynamics_seeds: (0..n_alphas.max(1)).map(|a| dynamics_seed(seed, s, a)).collect(),
            })
            .collect();
        Self {
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: config.clone(),
            samples,
            started_at: now(),
            finished_at: None,
            completed_samples: Vec::new(),
            files: BTreeMap::new(),
        }
    }

    pub fn load(dir: &Path) -> CliResult<Option<Self>> {
        let path = dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(&path).map_err(CliError::io(&path))?;
        Ok(Some(serde_json::from_str(&text).map_err(CliError::json(&path))?))
    }

    /// Writes through a temporary file so an interrupted save leaves the old manifest.
    pub fn save(&self, dir: &Path) -> CliResult<()> {
        let path = dir.join(MANIFEST_FILE);
        let tmp = dir.join(format!("{MANIFEST_FILE}.tmp"));
        let text = serde_json::to_string_pretty(self).map_err(CliError::json(&path))?;
        std::fs::write(&tmp, text).map_err(CliError::io(&tmp))?;
        std::fs::rename(&tmp, &path).map_err(CliError::io(&path))
    }

    /// Records (or re-records) the checksum of `dir/rel`.
    pub fn declare(&mut self, dir: &Path, rel: &str) -> CliResult<()> {
        let path = dir.join(rel);
        let bytes = std::fs::read(&path).map_err(CliError::io(&path))?;
        self.files.insert(rel.to_string(), FileEntry { sha256: sha256_hex(&bytes), bytes: bytes.len() as u64 });
        Ok(())
    }

    /// Contents of a declared file whose checksum still matches.
    pub fn read_declared(&self, dir: &Path, rel: &str) -> CliResult<Vec<u8>> {
        let entry = self
            .files
            .get(rel)
            .ok_or_else(|| CliError::Check(format!("{rel} is not declared in the manifest")))?;
        let path = dir.join(rel);
        let bytes = std::fs::read(&path).map_err(CliError::io(&path))?;
        if bytes.len() as u64 != entry.bytes || sha256_hex(&bytes) != entry.sha256 {
            return Err(CliError::Check(format!("{rel} does not match its manifest checksum")));
        }
        Ok(bytes)
    }

    pub fn is_declared_intact(&self, dir: &Path, rel: &str) -> bool {
        self.read_declared(dir, rel).is_ok()
    }
}
