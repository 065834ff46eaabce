//! MinHash / LSH near-duplicate detection over token shingles.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::{xxh3_64, xxh3_64_with_seed};

use crate::record::SampleLevel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NearDuplicateConfig {
    /// Jaccard similarity at or above which a later record is dropped.
    pub threshold: f64,
    /// Tokens per shingle.
    pub shingle_len: usize,
    pub bands: usize,
    pub rows: usize,
}

impl Default for NearDuplicateConfig {
    fn default() -> Self {
        Self { threshold: 0.9, shingle_len: 3, bands: 16, rows: 8 }
    }
}

fn shingles(tokens: &[String], k: usize) -> HashSet<u64> {
    let k = k.max(1);
    if tokens.is_empty() {
        return HashSet::new();
    }
    if tokens.len() < k {
        return HashSet::from([xxh3_64(tokens.join("\0").as_bytes())]);
    }
    tokens.windows(k).map(|w| xxh3_64(w.join("\0").as_bytes())).collect()
}

fn jaccard(a: &HashSet<u64>, b: &HashSet<u64>) -> f64 {
    let inter = a.intersection(b).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

impl NearDuplicateConfig {
    fn signature(&self, set: &HashSet<u64>) -> Vec<u64> {
        (0..self.bands * self.rows)
            .map(|seed| {
                set.iter()
                    .map(|h| xxh3_64_with_seed(&h.to_le_bytes(), seed as u64))
                    .min()
                    .unwrap_or(u64::MAX)
            })
            .collect()
    }

    /// Indices of documents whose shingle set is at least `threshold`
    /// similar to an earlier surviving document of the same level.
    pub(crate) fn find_redundant(&self, docs: &[Vec<String>], levels: &[SampleLevel]) -> HashSet<usize> {
        let sets: Vec<HashSet<u64>> = docs.iter().map(|d| shingles(d, self.shingle_len)).collect();
        let mut buckets: HashMap<(SampleLevel, usize, u64), Vec<usize>> = HashMap::new();
        let mut redundant = HashSet::new();
        for (i, set) in sets.iter().enumerate() {
            if set.is_empty() {
                continue;
            }
            let sig = self.signature(set);
            let bands: Vec<(SampleLevel, usize, u64)> = sig
                .chunks(self.rows.max(1))
                .enumerate()
                .map(|(b, rows)| {
                    let bytes: Vec<u8> = rows.iter().flat_map(|v| v.to_le_bytes()).collect();
                    (levels[i], b, xxh3_64(&bytes))
                })
                .collect();
            let mut candidates: Vec<usize> =
                bands.iter().filter_map(|k| buckets.get(k)).flatten().copied().collect();
            candidates.sort_unstable();
            candidates.dedup();
            if candidates.iter().any(|&j| jaccard(set, &sets[j]) >= self.threshold) {
                redundant.insert(i);
                continue;
            }
            for key in bands {
                buckets.entry(key).or_default().push(i);
            }
        }
        redundant
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn jaccard_of_shingles() {
        let a = shingles(&toks("a b c d"), 3);
        let b = shingles(&toks("a b c e"), 3);
        assert_eq!(a.len(), 2);
        assert!((jaccard(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(shingles(&toks("a b"), 3).len(), 1);
    }

    #[test]
    fn levels_are_independent() {
        let cfg = NearDuplicateConfig::default();
        let doc = toks("x + y + z + w + v + u");
        let docs = vec![doc.clone(), doc.clone(), doc];
        let levels = [SampleLevel::Line, SampleLevel::Page, SampleLevel::Line];
        assert_eq!(cfg.find_redundant(&docs, &levels), HashSet::from([2]));
    }

    #[test]
    fn dissimilar_documents_survive() {
        let cfg = NearDuplicateConfig::default();
        let docs = vec![toks("a b c d e f"), toks("g h i j k l")];
        assert!(cfg.find_redundant(&docs, &[SampleLevel::Line; 2]).is_empty());
    }
}
