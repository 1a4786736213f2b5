use std::path::Path;

use anyhow::Context;
use mdsaccel_core::CodeParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_NAME: &str = "manifest.json";

/// Written next to the shards by `encode`. `checksums[i]` is the SHA-256 of
/// node `i + 1`'s symbols (not of the shard file).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub original_len: u64,
    pub checksums: Vec<String>,
    pub shards: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Manifest {
    pub fn params(&self) -> anyhow::Result<CodeParams> {
        let p = CodeParams::new(self.n, self.k, self.m)?;
        anyhow::ensure!(
            self.checksums.len() == self.n && self.shards.len() == self.n,
            "manifest lists {} checksums and {} shards for n = {}",
            self.checksums.len(),
            self.shards.len(),
            self.n
        );
        Ok(p)
    }

    pub fn verify(&self, node: usize, symbols: &[u8]) -> bool {
        self.checksums.get(node.wrapping_sub(1)).is_some_and(|c| c.eq_ignore_ascii_case(&sha256_hex(symbols)))
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let m: Manifest = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        m.params()?;
        Ok(m)
    }
}
