// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{read_to_string, write_atomic};
use crate::error::{Error, Result};

/// SHA-256 hex digest of the TOML rendering of `config`.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let text = toml::to_string(config).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let digest = Sha256::digest(text.as_bytes());
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Key-value record written next to every run's outputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    pub config_hash: String,
    /// Extra facts about the run: inputs, output files, fingerprints.
    #[serde(default)]
    pub entries: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new<T: Serialize>(command: impl Into<String>, seed: u64, config: &T) -> Result<Self> {
        Ok(Self {
            tool: "dpdp".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            seed,
            config_hash: config_hash(config)?,
            entries: BTreeMap::new(),
        })
    }

    pub fn with(mut self, key: impl Into<String>, value: impl ToString) -> Self {
        self.entries.insert(key.into(), value.to_string());
        self
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        write_atomic(path, text.as_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        toml::from_str(&read_to_string(path)?).map_err(|e| Error::format(path, e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable_and_sensitive() {
        #[derive(Serialize)]
        struct C {
            a: u32,
        }
        let h = config_hash(&C { a: 1 }).unwrap();
        assert_eq!(h.len(), 64);
        assert_eq!(h, config_hash(&C { a: 1 }).unwrap());
        assert_ne!(h, config_hash(&C { a: 2 }).unwrap());
    }

    #[test]
    fn manifest_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("manifest.toml");
        let m = RunManifest::new("kmeans", 7, &BTreeMap::from([("k", 3)])).unwrap().with("frames", 12);
        m.write(&p).unwrap();
        assert_eq!(RunManifest::read(&p).unwrap(), m);
    }
}
