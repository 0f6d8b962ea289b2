//! Append-only JSONL cache of oracle requests and responses.
//!
//! One record per line; lookups are exact on the request digest. A fully
//! populated cache replays an llm-mode pipeline byte-identically with the
//! network disabled.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CacheRecord {
    pub request_digest: String,
    pub request: serde_json::Value,
    pub response: String,
    pub model_tag: String,
    pub created_at: String,
}

/// File-backed cache; safe for concurrent append and lookup.
pub struct OracleCache {
    path: Option<PathBuf>,
    entries: Mutex<BTreeMap<String, CacheRecord>>,
}

impl OracleCache {
    /// In-memory cache, nothing persisted.
    pub fn ephemeral() -> Self {
        OracleCache { path: None, entries: Mutex::new(BTreeMap::new()) }
    }

    /// Opens (or creates) a JSONL cache file and loads all records. The first
    /// record for a digest wins; later duplicates are ignored.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut entries = BTreeMap::new();
        if path.exists() {
            let file = File::open(&path)?;
            for line in BufReader::new(file).lines() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let record: CacheRecord = serde_json::from_str(&line)?;
                entries.entry(record.request_digest.clone()).or_insert(record);
            }
        }
        Ok(OracleCache { path: Some(path), entries: Mutex::new(entries) })
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, digest: &str) -> Option<CacheRecord> {
        self.entries.lock().unwrap().get(digest).cloned()
    }

    /// Appends a record to the file and the in-memory map.
    pub fn put(&self, record: CacheRecord) -> Result<()> {
        let mut entries = self.entries.lock().unwrap();
        if entries.contains_key(&record.request_digest) {
            return Ok(());
        }
        if let Some(path) = &self.path {
            let mut file = OpenOptions::new().create(true).append(true).open(path)?;
            let line = serde_json::to_string(&record)?;
            writeln!(file, "{line}")?;
        }
        entries.insert(record.request_digest.clone(), record);
        Ok(())
    }

    /// Rewrites the file with exactly one record per digest, sorted.
    pub fn compact(&self) -> Result<usize> {
        let entries = self.entries.lock().unwrap();
        if let Some(path) = &self.path {
            let mut file = File::create(path)?;
            for record in entries.values() {
                writeln!(file, "{}", serde_json::to_string(record)?)?;
            }
        }
        Ok(entries.len())
    }

    pub fn records(&self) -> Vec<CacheRecord> {
        self.entries.lock().unwrap().values().cloned().collect()
    }
}

pub(crate) fn timestamp() -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    format!("{secs}")
}
