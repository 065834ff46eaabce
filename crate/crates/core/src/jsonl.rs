//! Line-delimited JSON helpers.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line_no}: {source}")]
    Parse {
        line_no: usize,
        #[source]
        source: serde_json::Error,
    },
}

/// Reads every non-blank line as `T`. Line numbers in errors are 1-based.
pub fn read<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<Vec<T>, JsonlError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value = serde_json::from_str(&line).map_err(|source| JsonlError::Parse { line_no: idx + 1, source })?;
        out.push(value);
    }
    Ok(out)
}

pub fn write<T: Serialize>(path: impl AsRef<Path>, items: &[T]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_to(&mut w, items)?;
    w.flush()
}

pub fn write_to<T: Serialize, W: Write>(w: &mut W, items: &[T]) -> io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut *w, item)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}
