//! JSONL store of predictions keyed by `record_id`.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::EvalRecord;
use crate::jsonl::{self, JsonlError};

/// Later lines for the same `record_id` replace earlier ones.
#[derive(Debug)]
pub struct PredictionCache {
    path: PathBuf,
    entries: HashMap<String, EvalRecord>,
}

impl PredictionCache {
    /// Loads `path` if it exists; a missing file is an empty cache.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, JsonlError> {
        let path = path.into();
        let mut entries = HashMap::new();
        if path.exists() {
            for rec in jsonl::read::<EvalRecord>(&path)? {
                entries.insert(rec.record_id.clone(), rec);
            }
        }
        Ok(Self { path, entries })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, record_id: &str) -> Option<&EvalRecord> {
        self.entries.get(record_id)
    }

    pub fn successful(&self, record_id: &str) -> Option<&EvalRecord> {
        self.get(record_id).filter(|r| r.is_ok())
    }

    pub fn append(&mut self, rec: &EvalRecord) -> Result<(), JsonlError> {
        let file = OpenOptions::new().create(true).append(true).open(&self.path)?;
        let mut w = BufWriter::new(file);
        jsonl::write_to(&mut w, std::slice::from_ref(rec))?;
        w.flush()?;
        self.entries.insert(rec.record_id.clone(), rec.clone());
        Ok(())
    }

    /// Rewrites the file to hold exactly `records`, one line each.
    pub fn compact(&mut self, records: &[EvalRecord]) -> Result<(), JsonlError> {
        let mut w = BufWriter::new(File::create(&self.path)?);
        jsonl::write_to(&mut w, records)?;
        w.flush()?;
        self.entries = records.iter().map(|r| (r.record_id.clone(), r.clone())).collect();
        Ok(())
    }
}
