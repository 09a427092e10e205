use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const MANIFEST_SCHEMA: &str = "seqrisk.manifest/1";

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of_file(path: &Path) -> Result<Self> {
        Ok(Self {
            path: path.display().to_string(),
            sha256: sha256_hex(&std::fs::read(path)?),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub millis: u128,
}

/// Emitted by every command. Timings vary between runs; every other field
/// is a function of inputs, config and seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub tool_version: String,
    pub command: String,
    /// SHA-256 of the canonical config rendering.
    pub config_hash: String,
    pub seed: Option<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub timings: Vec<StageTiming>,
    /// Command-specific facts such as tensor shapes.
    pub details: BTreeMap<String, serde_json::Value>,
}

impl RunManifest {
    pub fn new(command: &str, canonical_config: &str, seed: Option<u64>) -> Self {
        Self {
            schema: MANIFEST_SCHEMA.into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config_hash: sha256_hex(canonical_config.as_bytes()),
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            timings: Vec::new(),
            details: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(FileDigest::of_file(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<()> {
        self.outputs.push(FileDigest::of_file(path)?);
        Ok(())
    }

    pub fn detail(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.details.insert(key.into(), serde_json::to_value(value)?);
        Ok(())
    }

    /// Runs `f`, recording its wall time under `stage`.
    pub fn time<R>(&mut self, stage: &str, f: impl FnOnce() -> R) -> R {
        let start = Instant::now();
        let r = f();
        self.timings.push(StageTiming {
            stage: stage.into(),
            millis: start.elapsed().as_millis(),
        });
        r
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        let a = RunManifest::new("train", "seed = 1\n", Some(1));
        let b = RunManifest::new("train", "seed = 1\n", Some(1));
        assert_eq!(a.config_hash, b.config_hash);
        assert_ne!(a.config_hash, RunManifest::new("train", "seed = 2\n", Some(2)).config_hash);
    }
}
