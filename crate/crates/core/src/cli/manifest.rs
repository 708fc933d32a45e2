use std::collections::BTreeMap;
use std::hash::Hasher;
use std::io::Write;
use std::path::{Path, PathBuf};

use fnv::FnvHasher;
use serde::Serialize;

use super::CliError;

/// What a run did, written as `manifest.json` next to its outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// FNV-1a 64 of the resolved settings JSON.
    pub config_digest: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub inputs: Vec<String>,
    /// Relative to the output directory, sorted.
    pub outputs: Vec<String>,
    pub counters: BTreeMap<String, u64>,
    pub metrics: BTreeMap<String, f64>,
    pub wall_time_s: f64,
}

pub fn digest_hex(bytes: &[u8]) -> String {
    let mut h = FnvHasher::default();
    h.write(bytes);
    format!("{:016x}", h.finish())
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value, seed: Option<u64>) -> Self {
        let canonical = serde_json::to_vec(&config).expect("settings serialize");
        Self {
            command: command.to_string(),
            config_digest: digest_hex(&canonical),
            config,
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            counters: BTreeMap::new(),
            metrics: BTreeMap::new(),
            wall_time_s: 0.0,
        }
    }

    pub fn count(&mut self, key: &str, n: u64) {
        *self.counters.entry(key.to_string()).or_default() += n;
    }

    pub fn add_output(&mut self, out_dir: &Path, path: &Path) {
        let rel = path.strip_prefix(out_dir).unwrap_or(path);
        self.outputs.push(rel.to_string_lossy().replace('\\', "/"));
    }

    pub fn write(&mut self, out_dir: &Path) -> Result<PathBuf, CliError> {
        self.outputs.sort();
        self.outputs.dedup();
        let path = out_dir.join("manifest.json");
        let text = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let err = |e: std::io::Error| CliError::input(format!("{}: {e}", path.display()));
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(err)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(err)?;
    tmp.write_all(bytes).map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}
