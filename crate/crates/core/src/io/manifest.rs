//! Run manifests: the resolved invocation plus a checksum per output file.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{OutputFile, RunConfig, SCHEMA_VERSION};
use crate::runner::Invocation;
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub artifact: String,
    pub version: String,
    pub schema_version: u32,
    pub invocation: Invocation,
    pub seed: u64,
    /// Fully resolved configuration, defaults included.
    pub config: RunConfig,
    /// Taken from `SOURCE_DATE_EPOCH` when set, so that repeated runs stay
    /// byte-identical.
    pub timestamp: Option<String>,
    /// SHA-256 of every output file, keyed by relative path.
    pub files: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(invocation: Invocation, config: &RunConfig, files: &[OutputFile]) -> Self {
        RunManifest {
            artifact: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            schema_version: SCHEMA_VERSION,
            invocation,
            seed: config.seed,
            config: config.clone(),
            timestamp: std::env::var("SOURCE_DATE_EPOCH").ok(),
            files: files.iter().map(|f| (f.path.clone(), sha256_hex(&f.bytes))).collect(),
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("serializable manifest");
        out.push(b'\n');
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let m: RunManifest = serde_json::from_slice(bytes)?;
        if m.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "manifest schema v{} is not the supported v{SCHEMA_VERSION}",
                m.schema_version
            )));
        }
        Ok(m)
    }

    pub fn read(dir: &Path) -> Result<Self> {
        Self::from_bytes(&std::fs::read(dir.join(MANIFEST_FILE))?)
    }

    /// Paths whose checksum differs from `files`, plus missing or extra paths.
    pub fn mismatches(&self, files: &[OutputFile]) -> Vec<String> {
        let got: BTreeMap<&str, String> = files.iter().map(|f| (f.path.as_str(), sha256_hex(&f.bytes))).collect();
        let mut bad: Vec<String> =
            self.files.iter().filter(|(p, sum)| got.get(p.as_str()) != Some(sum)).map(|(p, _)| p.clone()).collect();
        bad.extend(got.keys().filter(|p| !self.files.contains_key(**p)).map(|p| p.to_string()));
        bad
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes every file under `dir`, then the manifest.
pub fn write_tree(dir: &Path, files: &[OutputFile], manifest: &RunManifest) -> Result<()> {
    for f in files {
        let path = dir.join(&f.path);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, &f.bytes)?;
    }
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(MANIFEST_FILE), manifest.to_bytes())?;
    Ok(())
}

/// Reads back the files listed in `manifest` from `dir`.
pub fn read_tree(dir: &Path, manifest: &RunManifest) -> Result<Vec<OutputFile>> {
    manifest.files.keys().map(|p| Ok(OutputFile::new(p.clone(), std::fs::read(dir.join(p))?))).collect()
}
