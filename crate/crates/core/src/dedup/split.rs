//! Seeded per-level train/test split.
//!
//! Records of each level are sorted by `record_id` before sampling, so the
//! test membership depends only on the id set and the seed.

use std::collections::{BTreeMap, HashSet};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::record::{FormulaRecord, SampleLevel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitConfig {
    pub test_per_level: usize,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { test_per_level: 1000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SplitError {
    #[error("level {level}: have {have} records, need {need} for the test split")]
    InsufficientSamples { level: SampleLevel, have: usize, need: usize },
    #[error("duplicate record_id `{0}`")]
    DuplicateRecordId(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<FormulaRecord>,
    pub test: Vec<FormulaRecord>,
}

impl Split {
    pub fn manifest(&self, cfg: &SplitConfig) -> SplitManifest {
        let mut test_ids: Vec<String> = self.test.iter().map(|r| r.record_id.clone()).collect();
        test_ids.sort();
        SplitManifest { seed: cfg.seed, test_per_level: cfg.test_per_level, test_ids }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub test_per_level: usize,
    pub test_ids: Vec<String>,
}

/// Draws `test_per_level` records per present level. Both outputs are
/// ordered by level, then `record_id`. Levels without records are skipped.
pub fn split(records: &[FormulaRecord], cfg: &SplitConfig) -> Result<Split, SplitError> {
    let mut seen = HashSet::new();
    for r in records {
        if !seen.insert(r.record_id.as_str()) {
            return Err(SplitError::DuplicateRecordId(r.record_id.clone()));
        }
    }

    let mut by_level: BTreeMap<SampleLevel, Vec<&FormulaRecord>> = BTreeMap::new();
    for r in records {
        by_level.entry(r.level).or_default().push(r);
    }

    let mut out = Split::default();
    for (level, mut group) in by_level {
        if group.len() < cfg.test_per_level {
            return Err(SplitError::InsufficientSamples { level, have: group.len(), need: cfg.test_per_level });
        }
        group.sort_by(|a, b| a.record_id.cmp(&b.record_id));
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(level as u64);
        let mut is_test = vec![false; group.len()];
        for i in index::sample(&mut rng, group.len(), cfg.test_per_level) {
            is_test[i] = true;
        }
        for (rec, test) in group.into_iter().zip(is_test) {
            if test {
                out.test.push(rec.clone());
            } else {
                out.train.push(rec.clone());
            }
        }
    }
    Ok(out)
}
