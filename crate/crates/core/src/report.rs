//! Run manifests and content digests for reproducible outputs.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// What produced an output file: the subcommand, digests of every input, the
/// seed and the tool version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub inputs: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub version: String,
    pub outputs: Vec<String>,
    /// Seconds since the epoch; excluded from [`RunManifest::digest`].
    #[serde(default)]
    pub created: u64,
}

impl RunManifest {
    pub fn new(subcommand: impl Into<String>) -> Self {
        Self {
            subcommand: subcommand.into(),
            inputs: BTreeMap::new(),
            seed: None,
            version: crate::VERSION.to_string(),
            outputs: Vec::new(),
            created: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// Records an input by content digest. Flags and presets go in as their
    /// literal text.
    pub fn add_input(&mut self, name: impl Into<String>, bytes: &[u8]) {
        self.inputs.insert(name.into(), sha256_hex(bytes));
    }

    pub fn add_output(&mut self, path: impl Into<String>) {
        self.outputs.push(path.into());
    }

    /// Digest of everything but the timestamp.
    pub fn digest(&self) -> String {
        let mut stable = self.clone();
        stable.created = 0;
        let bytes = serde_json::to_vec(&stable).expect("manifest serializes");
        sha256_hex(&bytes)
    }
}

/// An output document tagged with the manifest that produced it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub manifest_digest: String,
    pub manifest: RunManifest,
    pub result: T,
}

impl<T: Serialize> Envelope<T> {
    pub fn new(manifest: RunManifest, result: T) -> Self {
        Self {
            manifest_digest: manifest.digest(),
            manifest,
            result,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_ignores_timestamp() {
        let mut a = RunManifest::new("eval").with_seed(7);
        a.add_input("system", b"phi");
        let mut b = a.clone();
        b.created += 1000;
        assert_eq!(a.digest(), b.digest());
        b.add_input("function", b"x");
        assert_ne!(a.digest(), b.digest());
    }

    #[test]
    fn known_sha256() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
