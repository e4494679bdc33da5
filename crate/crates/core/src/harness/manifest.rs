use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{DatasetSource, ExperimentConfig};
use crate::error::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub users: usize,
    pub items: usize,
    pub ratings: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauRecord {
    pub fold: usize,
    pub k: usize,
    pub tau: Option<f64>,
    pub estimated: bool,
    pub error: Option<String>,
}

impl TauRecord {
    pub fn fixed(fold: usize, k: usize, tau: f64) -> Self {
        Self {
            fold,
            k,
            tau: Some(tau),
            estimated: false,
            error: None,
        }
    }

    pub fn estimated(fold: usize, k: usize, tau: std::result::Result<f64, String>) -> Self {
        let (tau, error) = match tau {
            Ok(t) => (Some(t), None),
            Err(e) => (None, Some(e)),
        };
        Self {
            fold,
            k,
            tau,
            estimated: true,
            error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldTiming {
    pub fold: usize,
    /// Preparation plus the summed wall time of the fold's cells.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub fold: usize,
    pub method: String,
    pub k: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    /// Relative to the run directory, `/`-separated.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub input_hash: String,
    pub dataset: DatasetSummary,
    pub taus: Vec<TauRecord>,
    pub folds: Vec<FoldTiming>,
    pub total_seconds: f64,
    pub failures: Vec<CellFailure>,
    pub files: Vec<FileEntry>,
}

impl RunManifest {
    pub fn load(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn tau(&self, fold: usize, k: usize) -> Option<f64> {
        self.taus.iter().find(|t| t.fold == fold && t.k == k).and_then(|t| t.tau)
    }
}

/// Hash in the style of a git blob id: SHA-256 over `blob <len>\0<bytes>`.
pub fn blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()));
    h.update(bytes);
    hex::encode(h.finalize())
}

/// Hash of everything that determines the results: the configuration
/// without output location and thread count, and the dataset bytes.
pub fn input_hash(config: &ExperimentConfig, base: &Path) -> Result<String> {
    let mut canonical = config.clone();
    canonical.output = Default::default();
    canonical.threads = 0;
    let mut bytes = serde_json::to_vec(&canonical)?;
    if let DatasetSource::File { path, .. } = &config.dataset {
        let full = base.join(path);
        bytes.extend(fs::read(&full).map_err(|e| Error::io(&full, e))?);
    }
    Ok(blob_hash(&bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_hash_of_empty_input() {
        // sha256 of "blob 0\0"
        assert_eq!(blob_hash(b""), "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813");
    }
}
