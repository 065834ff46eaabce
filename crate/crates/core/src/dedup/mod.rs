//! Deduplication by canonical form and train/test splitting.
//!
//! Two records are duplicates when they sit at the same level and their
//! LaTeX normalizes to the same token stream. The first occurrence in input
//! order is kept. Levels are never compared with each other.

mod minhash;
mod split;

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_128;

use crate::lexer::{canonical_form, tokenize, normalize_with, LexError, NormalizeOptions};
use crate::record::{DedupKey, FormulaRecord, SampleLevel};

pub use minhash::NearDuplicateConfig;
pub use split::{split, Split, SplitConfig, SplitError, SplitManifest};

/// Per-level bookkeeping. `dropped` counts exact duplicates, near duplicates
/// and quarantined records alike; `train`/`test` stay zero until a split is
/// recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DedupStats {
    pub level: SampleLevel,
    pub before: usize,
    pub kept: usize,
    pub dropped: usize,
    #[serde(default)]
    pub quarantined: usize,
    #[serde(default)]
    pub train: usize,
    #[serde(default)]
    pub test: usize,
}

impl DedupStats {
    pub fn zero(level: SampleLevel) -> Self {
        Self { level, before: 0, kept: 0, dropped: 0, quarantined: 0, train: 0, test: 0 }
    }

    /// `before = kept + dropped`, and `kept = train + test` once split.
    pub fn is_consistent(&self) -> bool {
        self.before == self.kept + self.dropped
            && self.quarantined <= self.dropped
            && (self.kept == self.train + self.test || self.train + self.test == 0)
    }

    /// Fills `train`/`test` from a split of the kept records.
    pub fn record_split(stats: &mut [DedupStats], split: &Split) {
        for s in stats.iter_mut() {
            s.train = split.train.iter().filter(|r| r.level == s.level).count();
            s.test = split.test.iter().filter(|r| r.level == s.level).count();
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quarantined {
    pub record: FormulaRecord,
    pub error: String,
}

#[derive(Debug, Clone)]
pub struct DedupOutcome {
    pub kept: Vec<FormulaRecord>,
    /// One entry per level, in `SampleLevel::ALL` order.
    pub stats: Vec<DedupStats>,
    pub quarantined: Vec<Quarantined>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct DedupConfig {
    #[serde(default)]
    pub normalize: NormalizeOptions,
    /// Optional MinHash pass after exact deduplication; off unless set.
    #[serde(default)]
    pub near_duplicates: Option<NearDuplicateConfig>,
}

pub fn canonical_key(rec: &FormulaRecord) -> Result<DedupKey, LexError> {
    canonical_key_with(rec, &NormalizeOptions::default())
}

pub fn canonical_key_with(rec: &FormulaRecord, opts: &NormalizeOptions) -> Result<DedupKey, LexError> {
    let mut material = canonical_form(&rec.latex, opts)?;
    material.push('\u{1f}');
    material.push_str(rec.level.tag());
    Ok(DedupKey(xxh3_128(material.as_bytes())))
}

pub fn dedup(records: Vec<FormulaRecord>) -> DedupOutcome {
    dedup_with(records, &DedupConfig::default())
}

pub fn dedup_with(records: Vec<FormulaRecord>, cfg: &DedupConfig) -> DedupOutcome {
    let keys: Vec<Result<DedupKey, LexError>> =
        records.par_iter().map(|r| canonical_key_with(r, &cfg.normalize)).collect();

    let mut stats: BTreeMap<SampleLevel, DedupStats> =
        SampleLevel::ALL.into_iter().map(|l| (l, DedupStats::zero(l))).collect();
    let mut seen = HashSet::new();
    let mut kept = Vec::new();
    let mut quarantined = Vec::new();
    for (mut rec, key) in records.into_iter().zip(keys) {
        let entry = stats.get_mut(&rec.level).expect("all levels present");
        entry.before += 1;
        match key {
            Ok(key) if seen.insert(key) => {
                rec.dedup_key = Some(key);
                kept.push(rec);
            }
            Ok(_) => entry.dropped += 1,
            Err(e) => {
                entry.dropped += 1;
                entry.quarantined += 1;
                quarantined.push(Quarantined { record: rec, error: e.to_string() });
            }
        }
    }

    if let Some(near) = &cfg.near_duplicates {
        let shingles: Vec<Vec<String>> = kept
            .par_iter()
            .map(|r| {
                let seq = tokenize(&r.latex).expect("kept records lex");
                normalize_with(&seq, &cfg.normalize).tokens().iter().map(|t| t.to_string()).collect()
            })
            .collect();
        let levels: Vec<SampleLevel> = kept.iter().map(|r| r.level).collect();
        let redundant = near.find_redundant(&shingles, &levels);
        let mut idx = 0;
        kept.retain(|r| {
            let drop = redundant.contains(&idx);
            idx += 1;
            if drop {
                stats.get_mut(&r.level).expect("all levels present").dropped += 1;
            }
            !drop
        });
    }

    for rec in &kept {
        stats.get_mut(&rec.level).expect("all levels present").kept += 1;
    }
    DedupOutcome { kept, stats: stats.into_values().collect(), quarantined }
}
