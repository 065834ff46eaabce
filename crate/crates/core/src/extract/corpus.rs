//! Loading page documents from a corpus directory.
//!
//! A corpus directory holds `*.json` files with one page object each and/or
//! `*.jsonl` files with one page per line. Subdirectories are walked.

use std::collections::HashSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::PageDocument;
use crate::jsonl::{self, JsonlError};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("duplicate page_id `{0}`")]
    DuplicatePageId(String),
    #[error("{path}: empty page_id")]
    EmptyPageId { path: PathBuf },
}

/// Reads every page below `dir`, sorted by `page_id`.
pub fn load_corpus(dir: impl AsRef<Path>) -> Result<Vec<PageDocument>, CorpusError> {
    let mut files = Vec::new();
    collect_files(dir.as_ref(), &mut files)?;
    files.sort();

    let mut pages = Vec::new();
    for path in files {
        let loaded = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => {
                let raw = fs::read_to_string(&path).map_err(|source| CorpusError::Io { path: path.clone(), source })?;
                let page: PageDocument = serde_json::from_str(&raw)
                    .map_err(|e| CorpusError::Parse { path: path.clone(), message: e.to_string() })?;
                vec![page]
            }
            Some("jsonl") => jsonl::read(&path).map_err(|e| match e {
                JsonlError::Io(source) => CorpusError::Io { path: path.clone(), source },
                other => CorpusError::Parse { path: path.clone(), message: other.to_string() },
            })?,
            _ => continue,
        };
        for page in loaded {
            if page.page_id.is_empty() {
                return Err(CorpusError::EmptyPageId { path });
            }
            pages.push(page);
        }
    }

    pages.sort_by(|a, b| a.page_id.cmp(&b.page_id));
    let mut seen = HashSet::new();
    for page in &pages {
        if !seen.insert(page.page_id.as_str()) {
            return Err(CorpusError::DuplicatePageId(page.page_id.clone()));
        }
    }
    Ok(pages)
}

fn collect_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), CorpusError> {
    let io_err = |source| CorpusError::Io { path: dir.to_path_buf(), source };
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        if path.is_dir() {
            collect_files(&path, out)?;
        } else {
            out.push(path);
        }
    }
    Ok(())
}
