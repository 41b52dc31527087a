use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::IngestError;

/// Sidecar written next to each cached body.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheMeta {
    pub key: String,
    pub checksum: String,
    pub fetched_at_unix: u64,
    pub bytes: usize,
}

/// Verbatim response cache: one body file per key plus a metadata sidecar.
/// File names are the hex SHA-256 of the key.
#[derive(Debug)]
pub struct ResponseCache {
    dir: PathBuf,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl ResponseCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, IngestError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| IngestError::Io(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir,
            locks: Mutex::new(HashMap::new()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn paths(&self, key: &str) -> (PathBuf, PathBuf) {
        let digest = sha256_hex(key.as_bytes());
        (
            self.dir.join(format!("{digest}.body")),
            self.dir.join(format!("{digest}.meta.json")),
        )
    }

    fn key_lock(&self, key: &str) -> Arc<Mutex<()>> {
        self.locks
            .lock()
            .expect("cache lock table")
            .entry(key.to_string())
            .or_default()
            .clone()
    }

    /// `Ok(None)` on a miss; `CacheCorrupt` when the body does not match its
    /// recorded checksum or the sidecar is unreadable.
    pub fn load(&self, key: &str) -> Result<Option<Vec<u8>>, IngestError> {
        let lock = self.key_lock(key);
        let _guard = lock.lock().expect("cache key lock");
        let (body_path, meta_path) = self.paths(key);
        if !body_path.exists() || !meta_path.exists() {
            return Ok(None);
        }
        let corrupt = || IngestError::CacheCorrupt { key: key.to_string() };
        let meta: CacheMeta = fs::read_to_string(&meta_path)
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok())
            .ok_or_else(corrupt)?;
        let body = fs::read(&body_path).map_err(|_| corrupt())?;
        if meta.key != key || meta.checksum != sha256_hex(&body) {
            return Err(corrupt());
        }
        Ok(Some(body))
    }

    pub fn meta(&self, key: &str) -> Option<CacheMeta> {
        let (_, meta_path) = self.paths(key);
        fs::read_to_string(meta_path)
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok())
    }

    pub fn store(&self, key: &str, body: &[u8]) -> Result<(), IngestError> {
        let lock = self.key_lock(key);
        let _guard = lock.lock().expect("cache key lock");
        let (body_path, meta_path) = self.paths(key);
        let meta = CacheMeta {
            key: key.to_string(),
            checksum: sha256_hex(body),
            fetched_at_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            bytes: body.len(),
        };
        let meta_text = serde_json::to_vec_pretty(&meta).expect("meta serializes");
        // body before sidecar; a torn pair fails the checksum and is refetched
        write_atomic(&body_path, body)?;
        write_atomic(&meta_path, &meta_text)
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IngestError> {
    let io = |e: std::io::Error| IngestError::Io(format!("{}: {e}", path.display()));
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    let mut file = fs::File::create(&tmp).map_err(io)?;
    file.write_all(bytes).map_err(io)?;
    file.sync_all().map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}
