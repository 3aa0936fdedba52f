//! Provenance blocks embedded in every output artifact: tool version, config
//! hash, input digests, and seed. Everything here is a pure function of the
//! inputs so repeated runs emit byte-identical artifacts.

use std::path::Path;

use crate::error::{Error, Result};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// FNV-1a 64-bit digest.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Digest of a file's contents as a hex string.
pub fn file_digest(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(format!("{:016x}", fnv1a64(&bytes)))
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct InputDigest {
    pub path: String,
    pub digest: String,
}

#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    /// FNV-1a of the canonical effective-config serialization.
    pub config_hash: String,
    pub inputs: Vec<InputDigest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Provenance {
    pub fn new(canonical_config: &str, inputs: Vec<InputDigest>, seed: Option<u64>) -> Self {
        Provenance {
            tool_version: TOOL_VERSION.to_string(),
            config_hash: format!("{:016x}", fnv1a64(canonical_config.as_bytes())),
            inputs,
            seed,
        }
    }

    /// `# key=value` comment lines for CSV headers.
    pub fn csv_comment_lines(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("# tool_version={}\n", self.tool_version));
        s.push_str(&format!("# config_hash={}\n", self.config_hash));
        for i in &self.inputs {
            s.push_str(&format!("# input={} digest={}\n", i.path, i.digest));
        }
        if let Some(seed) = self.seed {
            s.push_str(&format!("# seed={seed}\n"));
        }
        s
    }
}
