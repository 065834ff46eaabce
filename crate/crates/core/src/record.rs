//! Dataset records shared across pipeline stages.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Structural granularity of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SampleLevel {
    Line,
    Paragraph,
    Page,
}

impl SampleLevel {
    pub const ALL: [SampleLevel; 3] = [SampleLevel::Line, SampleLevel::Paragraph, SampleLevel::Page];

    /// Lowercase tag used in file formats and keys.
    pub fn tag(self) -> &'static str {
        match self {
            SampleLevel::Line => "line",
            SampleLevel::Paragraph => "paragraph",
            SampleLevel::Page => "page",
        }
    }

    /// Column label used in reports.
    pub fn label(self) -> &'static str {
        match self {
            SampleLevel::Line => "Line",
            SampleLevel::Paragraph => "Paragraph",
            SampleLevel::Page => "Page",
        }
    }
}

impl fmt::Display for SampleLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SampleLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SampleLevel::ALL
            .into_iter()
            .find(|l| l.tag().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown sample level `{s}`"))
    }
}

/// 128-bit canonical digest, written as 32 lowercase hex digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DedupKey(pub u128);

impl fmt::Display for DedupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:032x}", self.0)
    }
}

impl Serialize for DedupKey {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DedupKey {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        if s.len() != 32 {
            return Err(serde::de::Error::custom("dedup key must be 32 hex digits"));
        }
        u128::from_str_radix(&s, 16).map(DedupKey).map_err(serde::de::Error::custom)
    }
}

/// One dataset sample.
///
/// `latex` is the complete ground-truth markup: a bare formula for line
/// samples, text with delimited formulas for paragraph and page samples.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormulaRecord {
    pub record_id: String,
    pub level: SampleLevel,
    pub latex: String,
    pub source_page_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dedup_key: Option<DedupKey>,
}
