//! Run manifests: a JSON record of what a command did — the exact
//! configuration, input digests, produced artifacts, and stage timings —
//! sufficient to reproduce the run bit for bit.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use lemane_core::{Error, Result};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub seed: u64,
    pub threads: usize,
    pub config: BTreeMap<String, BTreeMap<String, String>>,
    /// Input path → SHA-256 of its bytes, hashed before any compute.
    pub inputs: BTreeMap<String, String>,
    /// Artifact name → path written under the output directory.
    pub artifacts: BTreeMap<String, String>,
    pub timings_ms: BTreeMap<String, u128>,
}

impl RunManifest {
    pub fn new(
        command: &str,
        seed: u64,
        config: BTreeMap<String, BTreeMap<String, String>>,
    ) -> RunManifest {
        RunManifest {
            command: command.to_string(),
            seed,
            threads: rayon::current_num_threads(),
            config,
            inputs: BTreeMap::new(),
            artifacts: BTreeMap::new(),
            timings_ms: BTreeMap::new(),
        }
    }

    /// Hashes an input file and records it under its path.
    pub fn record_input(&mut self, path: &Path) -> Result<()> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        let digest = Sha256::digest(&bytes);
        let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
        self.inputs.insert(path.display().to_string(), hex);
        Ok(())
    }

    pub fn record_artifact(&mut self, name: &str, path: &Path) {
        self.artifacts
            .insert(name.to_string(), path.display().to_string());
    }

    /// Times a stage and records it under `name`.
    pub fn time_stage<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f()?;
        self.timings_ms
            .insert(name.to_string(), start.elapsed().as_millis());
        Ok(out)
    }

    /// Writes the manifest as pretty JSON.
    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Internal(format!("manifest serialization: {e}")))?;
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_records_hashes_and_timings() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.txt");
        std::fs::write(&input, b"0 1\n1 2\n").unwrap();

        let mut m = RunManifest::new("train", 42, BTreeMap::new());
        m.record_input(&input).unwrap();
        let got: i32 = m.time_stage("work", || Ok(41 + 1)).unwrap();
        assert_eq!(got, 42);
        m.record_artifact("schedule", &dir.path().join("schedule.tsv"));

        let out = dir.path().join("manifest.json");
        m.write(&out).unwrap();
        let text = std::fs::read_to_string(&out).unwrap();
        let value: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(value["command"], "train");
        assert_eq!(value["seed"], 42);
        // SHA-256 of b"0 1\n1 2\n", checked against an independent tool.
        assert_eq!(
            value["inputs"][input.display().to_string()],
            "8ba65ee1bbe8297e30cab4c5fc9b62a8caa0dbe7b89298edf1da2609beb24ae1"
        );
        assert!(value["timings_ms"]["work"].is_number());
        assert!(value["artifacts"]["schedule"]
            .as_str()
            .unwrap()
            .ends_with("schedule.tsv"));
    }

    #[test]
    fn hashing_a_missing_input_is_an_io_error() {
        let mut m = RunManifest::new("embed", 1, BTreeMap::new());
        let err = m.record_input(Path::new("/nonexistent/input.edges"));
        assert!(matches!(err, Err(Error::Io { .. })));
    }
}
