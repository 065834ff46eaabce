use std::collections::HashSet;
use std::path::Path;

use formulakit::dedup::{self, canonical_key, DedupConfig, DedupStats, NearDuplicateConfig, SplitConfig};
use formulakit::extract::{load_corpus, Extractor};
use formulakit::jsonl;
use formulakit::record::{FormulaRecord, SampleLevel};
use serde_json::Value;

const CORPUS: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/corpus60");
const EXPECTED: &str = include_str!("fixtures/corpus60_expected.json");

fn extracted() -> Vec<FormulaRecord> {
    let pages = load_corpus(Path::new(CORPUS)).unwrap();
    assert_eq!(pages.len(), 60);
    let (records, stats) = Extractor::default().process_corpus(&pages);
    assert_eq!(stats.pages, 60);
    assert_eq!(stats.spans_dropped_lex_error, 0);
    records
}

fn stats_for(stats: &[DedupStats], level: SampleLevel) -> DedupStats {
    *stats.iter().find(|s| s.level == level).unwrap()
}

#[test]
fn dedup_matches_constructed_duplicates() {
    let expected: Value = serde_json::from_str(EXPECTED).unwrap();
    let outcome = dedup::dedup(extracted());
    for level in SampleLevel::ALL {
        let want = &expected[level.tag()];
        let got = stats_for(&outcome.stats, level);
        assert_eq!(got.before as u64, want["before"].as_u64().unwrap(), "{level} before");
        assert_eq!(got.kept as u64, want["kept"].as_u64().unwrap(), "{level} kept");
        assert_eq!(got.quarantined as u64, want["quarantined"].as_u64().unwrap(), "{level} quarantined");
        assert!(got.is_consistent());
    }
    assert_eq!(outcome.quarantined.len(), 2);
    assert!(outcome.quarantined.iter().all(|q| q.record.source_page_id == "p049"));
}

#[test]
fn mirrored_pages_never_survive() {
    let outcome = dedup::dedup(extracted());
    let mirrors: Vec<_> = outcome
        .kept
        .iter()
        .filter(|r| r.level != SampleLevel::Line && r.source_page_id.as_str() >= "p050")
        .collect();
    assert!(mirrors.is_empty(), "{mirrors:?}");
}

#[test]
fn split_conserves_and_separates_keys() {
    let outcome = dedup::dedup(extracted());
    let cfg = SplitConfig { test_per_level: 10, seed: 17 };
    let split = dedup::split(&outcome.kept, &cfg).unwrap();
    let mut stats = outcome.stats.clone();
    DedupStats::record_split(&mut stats, &split);
    for s in &stats {
        assert_eq!(s.before, s.kept + s.dropped);
        assert_eq!(s.kept, s.train + s.test);
        assert_eq!(s.test, 10);
    }
    let train_keys: HashSet<_> = split.train.iter().map(|r| canonical_key(r).unwrap()).collect();
    assert!(split.test.iter().all(|r| !train_keys.contains(&canonical_key(r).unwrap())));
}

#[test]
fn rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let outcome = dedup::dedup(extracted());
        let split = dedup::split(&outcome.kept, &SplitConfig { test_per_level: 10, seed: 5 }).unwrap();
        let path = dir.path().join(name);
        jsonl::write(&path, &split.test).unwrap();
        std::fs::read(path).unwrap()
    };
    assert_eq!(run("a.jsonl"), run("b.jsonl"));
}

#[test]
fn near_duplicate_pass_keeps_conservation() {
    let cfg = DedupConfig { near_duplicates: Some(NearDuplicateConfig::default()), ..Default::default() };
    let exact = dedup::dedup(extracted());
    let near = dedup::dedup_with(extracted(), &cfg);
    for level in SampleLevel::ALL {
        let (e, n) = (stats_for(&exact.stats, level), stats_for(&near.stats, level));
        assert!(n.is_consistent());
        assert_eq!(e.before, n.before);
        assert!(n.kept <= e.kept);
    }
}
