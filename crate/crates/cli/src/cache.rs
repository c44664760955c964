//! On-disk cache of enumeration payloads, keyed by metric and operation.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: String,
    pub version: String,
    /// Stored verbatim so that a hit is byte-identical to a fresh computation.
    pub payload: String,
}

pub struct Cache {
    dir: PathBuf,
}

pub fn default_dir() -> PathBuf {
    if let Some(dir) = std::env::var_os("MDP_CACHE_DIR") {
        return PathBuf::from(dir);
    }
    let home = std::env::var_os("HOME").map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    home.join(".cache").join("mdp-workbench")
}

pub fn key(canonical_metric: &str, operation: &str) -> String {
    let mut h = Sha256::new();
    h.update(canonical_metric.as_bytes());
    h.update(b"\n");
    h.update(operation.as_bytes());
    h.update(b"\n");
    h.update(TOOL_VERSION.as_bytes());
    hex::encode(h.finalize())
}

impl Cache {
    pub fn new(dir: PathBuf) -> Self {
        Cache { dir }
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let text = fs::read_to_string(self.path(key)).ok()?;
        let entry: CacheEntry = serde_json::from_str(&text).ok()?;
        (entry.key == key && entry.version == TOOL_VERSION).then_some(entry.payload)
    }

    pub fn put(&self, key: &str, payload: &str) -> std::io::Result<()> {
        fs::create_dir_all(&self.dir)?;
        let entry =
            CacheEntry { key: key.to_string(), version: TOOL_VERSION.to_string(), payload: payload.to_string() };
        let tmp = self.dir.join(format!("{key}.tmp{}", std::process::id()));
        fs::write(&tmp, serde_json::to_string(&entry)?)?;
        fs::rename(tmp, self.path(key))
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_key_separation() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(dir.path().to_path_buf());
        let k = key("{\"kind\":\"line\"}", "vertices");
        assert_ne!(k, key("{\"kind\":\"line\"}", "kernels"));
        assert_eq!(cache.get(&k), None);
        cache.put(&k, "[[\"1/2\", \"1/2\"]]").unwrap();
        assert_eq!(cache.get(&k).as_deref(), Some("[[\"1/2\", \"1/2\"]]"));
        fs::write(cache.path(&k), "not json").unwrap();
        assert_eq!(cache.get(&k), None);
    }
}
