//! On-disk registry binding RFID tags to saved motion profiles.
//!
//! Layout: one `<tag_id>.json` file per record inside the registry directory.
//! Writes go to a temporary file in the same directory which is fsynced and
//! then renamed over the target, so readers only ever see a complete record.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Duration, Utc};
use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::profile::MotionProfile;
use crate::tag::{InvalidTagId, TagId};
use crate::testbed::Category;

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error(transparent)]
    InvalidTag(#[from] InvalidTagId),
    #[error("no record for tag {0}")]
    NotFound(TagId),
    #[error("corrupt record {path}: {source}")]
    Corrupt {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("registry i/o error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectRecord {
    pub tag_id: TagId,
    pub object_name: String,
    pub category: Category,
    pub profile: MotionProfile,
    pub updated_at: DateTime<Utc>,
}

impl ObjectRecord {
    pub fn new(tag_id: TagId, object_name: impl Into<String>, category: Category, profile: MotionProfile) -> Self {
        ObjectRecord {
            tag_id,
            object_name: object_name.into(),
            category,
            profile,
            updated_at: Utc::now(),
        }
    }
}

#[derive(Debug)]
pub struct Registry {
    dir: PathBuf,
    write_lock: Mutex<()>,
}

impl Registry {
    /// Opens (creating if needed) the registry directory.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, RegistryError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(Registry {
            dir,
            write_lock: Mutex::new(()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path_for(&self, tag: &TagId) -> PathBuf {
        self.dir.join(format!("{tag}.json"))
    }

    /// Stores `record`, replacing any previous record for the same tag.
    ///
    /// `updated_at` is stamped here and is strictly later than the stamp of
    /// the record it replaces. Returns the record as stored.
    pub fn put_record(&self, mut record: ObjectRecord) -> Result<ObjectRecord, RegistryError> {
        let _guard = self.write_lock.lock();
        let mut stamp = Utc::now();
        if let Ok(prev) = self.get_record(&record.tag_id) {
            if stamp <= prev.updated_at {
                stamp = prev.updated_at + Duration::microseconds(1);
            }
        }
        record.updated_at = stamp;
        let json = serde_json::to_vec_pretty(&record).expect("records always serialize");
        let mut tmp = tempfile::Builder::new()
            .prefix(".tmp-")
            .suffix(".part")
            .tempfile_in(&self.dir)?;
        tmp.write_all(&json)?;
        tmp.as_file().sync_all()?;
        tmp.persist(self.path_for(&record.tag_id))
            .map_err(|e| RegistryError::Io(e.error))?;
        if let Ok(d) = fs::File::open(&self.dir) {
            // directory fsync is best effort; not every platform allows it
            let _ = d.sync_all();
        }
        tracing::debug!(tag = %record.tag_id, "stored record");
        Ok(record)
    }

    pub fn get_record(&self, tag: &TagId) -> Result<ObjectRecord, RegistryError> {
        let path = self.path_for(tag);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(RegistryError::NotFound(tag.clone()))
            }
            Err(e) => return Err(e.into()),
        };
        serde_json::from_slice(&bytes).map_err(|source| RegistryError::Corrupt { path, source })
    }

    /// Looks up a tag given as text, normalizing its case.
    pub fn get(&self, tag: &str) -> Result<ObjectRecord, RegistryError> {
        self.get_record(&TagId::parse(tag)?)
    }

    /// All records ordered by object name, then tag.
    pub fn list_records(&self) -> Result<Vec<ObjectRecord>, RegistryError> {
        let mut records = Vec::new();
        for entry in fs::read_dir(&self.dir)? {
            let path = entry?.path();
            let Some(stem) = path
                .file_name()
                .and_then(|n| n.to_str())
                .and_then(|n| n.strip_suffix(".json"))
            else {
                continue;
            };
            let Ok(tag) = TagId::parse(stem) else {
                continue;
            };
            if tag.as_str() != stem {
                continue;
            }
            match self.get_record(&tag) {
                Ok(r) => records.push(r),
                // deleted between read_dir and read
                Err(RegistryError::NotFound(_)) => {}
                Err(e) => return Err(e),
            }
        }
        records.sort_by(|a, b| {
            a.object_name
                .cmp(&b.object_name)
                .then_with(|| a.tag_id.cmp(&b.tag_id))
        });
        Ok(records)
    }
}
