//! Run manifests.
//!
//! Every command finishes by writing `manifest.json` into its output
//! directory: the command name, a hash of the fully resolved config, the
//! root seed, the build version, and a checksum per output file. The
//! manifest is written after all outputs, so its presence marks the
//! directory as complete; a directory without one is a dead run.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{io_err, CliError};

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path relative to the manifest's directory, with `/` separators.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub version: u32,
    pub command: String,
    /// Hash of the resolved config, after defaults and overrides.
    pub config_sha256: String,
    pub root_seed: u64,
    pub build: String,
    pub outputs: Vec<ManifestEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let digest = h.finalize();
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Hashes the resolved config by its canonical JSON serialization.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String, CliError> {
    let bytes = serde_json::to_vec(config).map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(sha256_hex(&bytes))
}

/// Hashes the named outputs (paths relative to `dir`, sorted) and writes
/// the manifest last.
pub fn write_manifest(
    dir: &Path,
    command: &str,
    config_sha256: String,
    root_seed: u64,
    outputs: &[PathBuf],
) -> Result<RunManifest, CliError> {
    let mut entries = Vec::with_capacity(outputs.len());
    let mut sorted: Vec<&PathBuf> = outputs.iter().collect();
    sorted.sort();
    for rel in sorted {
        let full = dir.join(rel);
        let bytes = fs::read(&full).map_err(|e| io_err(&full, e))?;
        entries.push(ManifestEntry {
            path: rel.to_string_lossy().replace('\\', "/"),
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
        });
    }
    let manifest = RunManifest {
        version: MANIFEST_VERSION,
        command: command.to_string(),
        config_sha256,
        root_seed,
        build: env!("CARGO_PKG_VERSION").to_string(),
        outputs: entries,
    };
    let path = dir.join(MANIFEST_NAME);
    let text =
        serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Runtime(e.to_string()))?;
    fs::write(&path, text.as_bytes()).map_err(|e| io_err(&path, e))?;
    Ok(manifest)
}

/// Re-hashes every output named by the manifest in `dir`.
pub fn verify_manifest(dir: &Path) -> Result<RunManifest, CliError> {
    let path = dir.join(MANIFEST_NAME);
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    let manifest: RunManifest =
        serde_json::from_str(&text).map_err(|e| CliError::Runtime(e.to_string()))?;
    for entry in &manifest.outputs {
        let full = dir.join(&entry.path);
        let bytes = fs::read(&full).map_err(|e| io_err(&full, e))?;
        let got = sha256_hex(&bytes);
        if got != entry.sha256 {
            return Err(CliError::Check(format!(
                "{}: checksum {} does not match manifest {}",
                entry.path, got, entry.sha256
            )));
        }
    }
    Ok(manifest)
}
