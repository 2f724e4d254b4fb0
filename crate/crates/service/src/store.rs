//! File-backed record store.
//!
//! One JSON file per record under `<root>/<kind>s/<id>.json`. Writes go to a
//! temporary file in the same directory and are renamed into place, so a
//! reader sees either the old or the new record, never a partial one.

use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordKind {
    Dataset,
    Scenario,
}

impl RecordKind {
    fn dir(self) -> &'static str {
        match self {
            RecordKind::Dataset => "datasets",
            RecordKind::Scenario => "scenarios",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoreRecord {
    pub kind: RecordKind,
    pub id: String,
    /// Canonical JSON text of the stored object.
    pub payload: String,
    /// Milliseconds since the Unix epoch.
    pub updated_at: u64,
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store io error: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt record {path}: {message}")]
    Corrupt { path: String, message: String },
    #[error("invalid record id `{0}`")]
    InvalidId(String),
}

pub struct FileStore {
    root: PathBuf,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl FileStore {
    pub fn open(root: impl AsRef<Path>) -> Result<Self, StoreError> {
        let root = root.as_ref().to_path_buf();
        for kind in [RecordKind::Dataset, RecordKind::Scenario] {
            fs::create_dir_all(root.join(kind.dir()))?;
        }
        Ok(FileStore {
            root,
            locks: Mutex::new(HashMap::new()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn path(&self, kind: RecordKind, id: &str) -> Result<PathBuf, StoreError> {
        let valid = !id.is_empty()
            && id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        if !valid {
            return Err(StoreError::InvalidId(id.to_string()));
        }
        Ok(self.root.join(kind.dir()).join(format!("{id}.json")))
    }

    pub fn put(&self, kind: RecordKind, id: &str, payload: String) -> Result<StoreRecord, StoreError> {
        let path = self.path(kind, id)?;
        let record = StoreRecord {
            kind,
            id: id.to_string(),
            payload,
            updated_at: now_millis(),
        };
        let text = serde_json::to_string(&record).expect("record serializes");
        let tmp = path.with_extension(format!("tmp-{}", uuid::Uuid::new_v4().simple()));
        {
            let mut file = fs::File::create(&tmp)?;
            file.write_all(text.as_bytes())?;
            file.sync_all()?;
        }
        if let Err(err) = fs::rename(&tmp, &path) {
            let _ = fs::remove_file(&tmp);
            return Err(err.into());
        }
        Ok(record)
    }

    pub fn get(&self, kind: RecordKind, id: &str) -> Result<Option<StoreRecord>, StoreError> {
        let path = match self.path(kind, id) {
            Ok(p) => p,
            Err(StoreError::InvalidId(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| StoreError::Corrupt {
                path: path.display().to_string(),
                message: e.to_string(),
            })
    }

    /// Lock serializing read-modify-write cycles on one record.
    pub fn lock(&self, id: &str) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().unwrap_or_else(|e| e.into_inner());
        locks.entry(id.to_string()).or_default().clone()
    }
}

fn now_millis() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn write_then_read_is_identical() {
        let dir = tempfile::tempdir().unwrap();
        let store = FileStore::open(dir.path()).unwrap();
        let payload = "{\"a\":1,\"b\":[1.5,2]}".to_string();
        let written = store.put(RecordKind::Dataset, "abc", payload.clone()).unwrap();
        let read = store.get(RecordKind::Dataset, "abc").unwrap().unwrap();
        assert_eq!(read, written);
        assert_eq!(read.payload, payload);
        assert!(store.get(RecordKind::Scenario, "abc").unwrap().is_none());
    }

    #[test]
    fn rejects_path_like_ids() {
        let dir = tempfile::tempdir().unwrap();
        let store = FileStore::open(dir.path()).unwrap();
        assert!(store.put(RecordKind::Dataset, "../x", "{}".into()).is_err());
        assert!(store.get(RecordKind::Dataset, "../x").unwrap().is_none());
    }

    #[test]
    fn no_temp_files_left_behind() {
        let dir = tempfile::tempdir().unwrap();
        let store = FileStore::open(dir.path()).unwrap();
        for i in 0..5 {
            store.put(RecordKind::Scenario, "s1", format!("{{\"v\":{i}}}")).unwrap();
        }
        let names: Vec<_> = fs::read_dir(dir.path().join("scenarios"))
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        assert_eq!(names, vec!["s1.json"]);
    }
}
