//! File contract with the external render worker.
//!
//! The pipeline writes a manifest of formulas, the worker renders each one
//! and reports every drawn character as a box, and the layouts come back
//! here to be validated and normalized for glyph matching. Coordinates use
//! render units with y growing downward.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::process::Command;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use thiserror::Error;

use crate::record::{FormulaRecord, SampleLevel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub record_id: String,
    pub latex: String,
    pub display_mode: bool,
    #[serde(default = "default_scale")]
    pub scale: f64,
}

fn default_scale() -> f64 {
    1.0
}

impl ManifestEntry {
    /// Line samples render in display mode; paragraphs and pages are text
    /// with inline math.
    pub fn for_record(rec: &FormulaRecord) -> Self {
        Self {
            record_id: rec.record_id.clone(),
            latex: rec.latex.clone(),
            display_mode: rec.level == SampleLevel::Line,
            scale: 1.0,
        }
    }
}

fn serialize_char<S: Serializer>(c: &char, s: S) -> Result<S::Ok, S::Error> {
    let mut buf = [0u8; 4];
    s.serialize_str(c.encode_utf8(&mut buf))
}

fn deserialize_char<'de, D: Deserializer<'de>>(d: D) -> Result<char, D::Error> {
    let s = String::deserialize(d)?;
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Ok(c),
        _ => Err(serde::de::Error::custom("glyph character must be exactly one scalar")),
    }
}

/// One drawn character: identity, center and extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlyphBox {
    #[serde(serialize_with = "serialize_char", deserialize_with = "deserialize_char")]
    pub ch: char,
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Bounds {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Bounds {
    pub const UNIT: Bounds = Bounds { min_x: 0.0, min_y: 0.0, max_x: 1.0, max_y: 1.0 };

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn strictly_contains(&self, x: f64, y: f64) -> bool {
        self.min_x < x && x < self.max_x && self.min_y < y && y < self.max_y
    }

    pub fn is_unit(&self) -> bool {
        const EPS: f64 = 1e-9;
        (self.min_x - 0.0).abs() < EPS
            && (self.min_y - 0.0).abs() < EPS
            && (self.max_x - 1.0).abs() < EPS
            && (self.max_y - 1.0).abs() < EPS
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlyphLayout {
    pub record_id: String,
    pub render_ok: bool,
    #[serde(default)]
    pub error_message: String,
    #[serde(default)]
    pub bounds: Bounds,
    pub glyphs: Vec<GlyphBox>,
}

impl GlyphLayout {
    /// A failed render, as the worker reports it.
    pub fn failed(record_id: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            record_id: record_id.into(),
            render_ok: false,
            error_message: message.into(),
            bounds: Bounds::default(),
            glyphs: Vec::new(),
        }
    }

    /// A successful layout whose bounds are the union of the glyph boxes.
    pub fn from_glyphs(record_id: impl Into<String>, glyphs: Vec<GlyphBox>) -> Self {
        let mut bounds = Bounds {
            min_x: f64::INFINITY,
            min_y: f64::INFINITY,
            max_x: f64::NEG_INFINITY,
            max_y: f64::NEG_INFINITY,
        };
        for g in &glyphs {
            bounds.min_x = bounds.min_x.min(g.x - g.w / 2.0);
            bounds.max_x = bounds.max_x.max(g.x + g.w / 2.0);
            bounds.min_y = bounds.min_y.min(g.y - g.h / 2.0);
            bounds.max_y = bounds.max_y.max(g.y + g.h / 2.0);
        }
        if glyphs.is_empty() {
            bounds = Bounds::default();
        }
        Self { record_id: record_id.into(), render_ok: true, error_message: String::new(), bounds, glyphs }
    }
}

#[derive(Debug, Error)]
pub enum BridgeError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("manifest needs at least one record")]
    EmptyManifest,
    #[error("duplicate record_id `{0}` in manifest")]
    DuplicateRecordId(String),
    #[error("record `{0}` has empty latex")]
    EmptyLatex(String),
    #[error("layout line {line_no}: field `{field}`: {message}")]
    Schema { line_no: usize, field: String, message: String },
    #[error("render worker failed ({status}): {stderr}")]
    Worker { status: String, stderr: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LayoutError {
    #[error("layout `{record_id}` has zero-size bounds")]
    DegenerateBounds { record_id: String },
    #[error("layout `{record_id}` did not render")]
    RenderFailed { record_id: String },
}

pub fn write_manifest(records: &[FormulaRecord], path: impl AsRef<Path>) -> Result<usize, BridgeError> {
    let entries: Vec<ManifestEntry> = records.iter().map(ManifestEntry::for_record).collect();
    write_manifest_entries(&entries, path)
}

pub fn write_manifest_entries(entries: &[ManifestEntry], path: impl AsRef<Path>) -> Result<usize, BridgeError> {
    if entries.is_empty() {
        return Err(BridgeError::EmptyManifest);
    }
    let mut ids = HashSet::new();
    for e in entries {
        if !ids.insert(e.record_id.as_str()) {
            return Err(BridgeError::DuplicateRecordId(e.record_id.clone()));
        }
        if e.latex.trim().is_empty() {
            return Err(BridgeError::EmptyLatex(e.record_id.clone()));
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    crate::jsonl::write_to(&mut w, entries)?;
    w.flush()?;
    Ok(entries.len())
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Vec<ManifestEntry>, BridgeError> {
    crate::jsonl::read(path).map_err(|e| match e {
        crate::jsonl::JsonlError::Io(e) => BridgeError::Io(e),
        crate::jsonl::JsonlError::Parse { line_no, source } => {
            BridgeError::Schema { line_no, field: "<line>".into(), message: source.to_string() }
        }
    })
}

/// Reads and validates worker output. Blank lines are skipped; failed
/// renders are kept.
pub fn read_layouts(path: impl AsRef<Path>) -> Result<Vec<GlyphLayout>, BridgeError> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if !line.trim().is_empty() {
            lines.push((idx + 1, line));
        }
    }
    lines.par_iter().map(|(no, line)| parse_layout_line(line, *no)).collect()
}

pub fn parse_layout_line(line: &str, line_no: usize) -> Result<GlyphLayout, BridgeError> {
    let schema = |field: &str, message: &str| BridgeError::Schema {
        line_no,
        field: field.to_string(),
        message: message.to_string(),
    };
    let value: Value = serde_json::from_str(line).map_err(|e| schema("<line>", &e.to_string()))?;
    let obj = value.as_object().ok_or_else(|| schema("<line>", "expected an object"))?;

    let record_id = match obj.get("record_id") {
        Some(Value::String(s)) if !s.is_empty() => s.clone(),
        Some(_) => return Err(schema("record_id", "expected a nonempty string")),
        None => return Err(schema("record_id", "missing")),
    };
    let render_ok = match obj.get("render_ok") {
        Some(Value::Bool(b)) => *b,
        Some(_) => return Err(schema("render_ok", "expected a boolean")),
        None => return Err(schema("render_ok", "missing")),
    };
    let error_message = match obj.get("error_message") {
        Some(Value::String(s)) => s.clone(),
        None | Some(Value::Null) => String::new(),
        Some(_) => return Err(schema("error_message", "expected a string")),
    };
    if !render_ok && error_message.trim().is_empty() {
        return Err(schema("error_message", "required when render_ok is false"));
    }

    let number = |v: Option<&Value>, field: &str| -> Result<f64, BridgeError> {
        match v.and_then(Value::as_f64) {
            Some(n) if n.is_finite() => Ok(n),
            Some(_) => Err(schema(field, "expected a finite number")),
            None if v.is_none() => Err(schema(field, "missing")),
            None => Err(schema(field, "expected a number")),
        }
    };

    let bounds = match obj.get("bounds") {
        Some(Value::Object(b)) => Bounds {
            min_x: number(b.get("min_x"), "bounds.min_x")?,
            min_y: number(b.get("min_y"), "bounds.min_y")?,
            max_x: number(b.get("max_x"), "bounds.max_x")?,
            max_y: number(b.get("max_y"), "bounds.max_y")?,
        },
        None | Some(Value::Null) if !render_ok => Bounds::default(),
        None => return Err(schema("bounds", "missing")),
        Some(_) => return Err(schema("bounds", "expected an object")),
    };
    if bounds.width() < 0.0 || bounds.height() < 0.0 {
        return Err(schema("bounds", "max must not be below min"));
    }

    let raw_glyphs = match obj.get("glyphs") {
        Some(Value::Array(a)) => a,
        Some(_) => return Err(schema("glyphs", "expected an array")),
        None => return Err(schema("glyphs", "missing")),
    };
    let mut glyphs = Vec::with_capacity(raw_glyphs.len());
    for (i, g) in raw_glyphs.iter().enumerate() {
        let field = |name: &str| format!("glyphs[{i}].{name}");
        let g = g.as_object().ok_or_else(|| schema(&format!("glyphs[{i}]"), "expected an object"))?;
        let ch = match g.get("ch") {
            Some(Value::String(s)) if s.chars().count() == 1 => s.chars().next().unwrap_or_default(),
            Some(_) => return Err(schema(&field("ch"), "expected exactly one character")),
            None => return Err(schema(&field("ch"), "missing")),
        };
        let glyph = GlyphBox {
            ch,
            x: number(g.get("x"), &field("x"))?,
            y: number(g.get("y"), &field("y"))?,
            w: number(g.get("w"), &field("w"))?,
            h: number(g.get("h"), &field("h"))?,
        };
        if glyph.w <= 0.0 {
            return Err(schema(&field("w"), "must be positive"));
        }
        if glyph.h <= 0.0 {
            return Err(schema(&field("h"), "must be positive"));
        }
        if render_ok && !bounds.strictly_contains(glyph.x, glyph.y) {
            return Err(schema(&format!("glyphs[{i}]"), "center outside bounds"));
        }
        glyphs.push(glyph);
    }

    Ok(GlyphLayout { record_id, render_ok, error_message, bounds, glyphs })
}

pub fn write_layouts(layouts: &[GlyphLayout], path: impl AsRef<Path>) -> io::Result<()> {
    crate::jsonl::write(path, layouts)
}

/// Differences between the ids a manifest asked for and the ids the worker returned.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct Coverage {
    pub missing: Vec<String>,
    pub unexpected: Vec<String>,
    pub duplicated: Vec<String>,
}

impl Coverage {
    pub fn is_complete(&self) -> bool {
        self.missing.is_empty() && self.unexpected.is_empty() && self.duplicated.is_empty()
    }
}

pub fn check_coverage(manifest: &[ManifestEntry], layouts: &[GlyphLayout]) -> Coverage {
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for l in layouts {
        *counts.entry(l.record_id.as_str()).or_default() += 1;
    }
    let wanted: HashSet<&str> = manifest.iter().map(|e| e.record_id.as_str()).collect();
    let mut cov = Coverage {
        missing: manifest
            .iter()
            .filter(|e| !counts.contains_key(e.record_id.as_str()))
            .map(|e| e.record_id.clone())
            .collect(),
        unexpected: counts.keys().filter(|id| !wanted.contains(*id)).map(|s| s.to_string()).collect(),
        duplicated: counts.iter().filter(|(_, &n)| n > 1).map(|(id, _)| id.to_string()).collect(),
    };
    cov.unexpected.sort();
    cov.duplicated.sort();
    cov
}

/// Maps glyph centers into the unit box.
///
/// The center extent is scaled by its longer side, so that axis spans
/// exactly `[0, 1]`; the shorter axis is centered. A layout whose centers
/// all coincide (for example a single glyph) lands on `(0.5, 0.5)`. Glyph
/// extents are scaled by the same factor.
pub fn normalize_layout(layout: &GlyphLayout) -> Result<GlyphLayout, LayoutError> {
    let record_id = || layout.record_id.clone();
    if !layout.render_ok {
        return Err(LayoutError::RenderFailed { record_id: record_id() });
    }
    let mut out = layout.clone();
    out.bounds = Bounds::UNIT;
    if layout.glyphs.is_empty() {
        return Ok(out);
    }
    let b = &layout.bounds;
    if b.width() == 0.0 && b.height() == 0.0 {
        return Err(LayoutError::DegenerateBounds { record_id: record_id() });
    }

    let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for g in &layout.glyphs {
        lo_x = lo_x.min(g.x);
        hi_x = hi_x.max(g.x);
        lo_y = lo_y.min(g.y);
        hi_y = hi_y.max(g.y);
    }
    let (dx, dy) = (hi_x - lo_x, hi_y - lo_y);
    let side = dx.max(dy);
    if side == 0.0 {
        let scale = b.width().max(b.height());
        for g in &mut out.glyphs {
            g.x = 0.5;
            g.y = 0.5;
            g.w /= scale;
            g.h /= scale;
        }
        return Ok(out);
    }
    let pad_x = (1.0 - dx / side) / 2.0;
    let pad_y = (1.0 - dy / side) / 2.0;
    for g in &mut out.glyphs {
        g.x = (g.x - lo_x) / side + pad_x;
        g.y = (g.y - lo_y) / side + pad_y;
        g.w /= side;
        g.h /= side;
    }
    Ok(out)
}

/// Runs `command --input MANIFEST --output LAYOUTS`. The command string is
/// split on whitespace; no shell is involved.
pub fn run_worker(command: &str, manifest: &Path, output: &Path) -> Result<(), BridgeError> {
    let mut parts = command.split_whitespace();
    let program = parts.next().ok_or_else(|| BridgeError::Worker {
        status: "not started".into(),
        stderr: "empty worker command".into(),
    })?;
    let result = Command::new(program)
        .args(parts)
        .arg("--input")
        .arg(manifest)
        .arg("--output")
        .arg(output)
        .output()?;
    if !result.status.success() {
        return Err(BridgeError::Worker {
            status: result.status.to_string(),
            stderr: String::from_utf8_lossy(&result.stderr).trim().to_string(),
        });
    }
    Ok(())
}
