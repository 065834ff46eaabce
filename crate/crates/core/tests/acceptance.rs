//! One line per acceptance criterion. Runs as a plain binary so the lines
//! are always printed; exits non-zero if any criterion fails.

mod common;

use std::collections::HashSet;
use std::path::Path;
use std::time::{Duration, Instant};

use common::mock::{MockServer, Reply};
use common::{brute_force_matching, chars, dp_levenshtein, random_latex, random_layout, random_unicode};
use formulakit::client::{EndpointConfig, EvalItem, Recognizer};
use formulakit::dedup::{self, canonical_key, DedupStats, SplitConfig};
use formulakit::extract::{load_corpus, Extractor};
use formulakit::jsonl;
use formulakit::lexer::{detokenize, normalize, tokenize};
use formulakit::metrics::{cdm, edit_distance, levenshtein, match_glyphs, EdScore, DEFAULT_TAU};
use formulakit::record::SampleLevel;
use formulakit::render;
use formulakit::report::{aggregate, render_table, Format, Metric, ScoreRecord, SystemSummary};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Check = fn() -> Outcome;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ed_oracle() -> Outcome {
    let mut r = rng(1);
    let pairs: Vec<(Vec<char>, Vec<char>)> =
        (0..1000).map(|_| (chars(&random_unicode(&mut r, 200)), chars(&random_unicode(&mut r, 200)))).collect();
    let start = Instant::now();
    let mut mismatches = 0;
    for (a, b) in &pairs {
        if levenshtein(a, b) != dp_levenshtein(a, b) {
            mismatches += 1;
        }
    }
    let elapsed = start.elapsed();
    let detail = format!("1000 pairs, {mismatches} mismatches, {:.2}s", elapsed.as_secs_f64());
    if mismatches == 0 && elapsed < Duration::from_secs(10) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn ed_laws() -> Outcome {
    let mut r = rng(2);
    let mut violations = 0;
    for i in 0..10_000 {
        let (a, b) = if i % 2 == 0 {
            (random_unicode(&mut r, 80), random_unicode(&mut r, 80))
        } else {
            (random_latex(&mut r), random_latex(&mut r))
        };
        let ab = edit_distance(&a, &b);
        let ok = edit_distance(&a, &a).value() == 0.0
            && ab == edit_distance(&b, &a)
            && (0.0..=1.0).contains(&ab.value());
        violations += usize::from(!ok);
    }
    let detail = format!("10000 pairs, {violations} violations");
    if violations == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn lexer_roundtrip() -> Outcome {
    let mut r = rng(3);
    let (mut roundtrip, mut idempotence) = (0, 0);
    for _ in 0..10_000 {
        let src = random_latex(&mut r);
        let Ok(seq) = tokenize(&src) else {
            return Err(format!("generated input failed to lex: {src:?}"));
        };
        match tokenize(&detokenize(&seq)) {
            Ok(again) if again.token_eq(&seq) => {}
            _ => roundtrip += 1,
        }
        let once = normalize(&seq);
        if !normalize(&once).token_eq(&once) {
            idempotence += 1;
        }
    }
    let detail = format!("10000 strings, {roundtrip} roundtrip and {idempotence} idempotence violations");
    if roundtrip + idempotence == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn cdm_identity_symmetry() -> Outcome {
    let mut r = rng(4);
    let alphabet = ['a', 'b', 'x', '1', '—', '∑', '('];
    let mut identity = 0;
    for i in 0..100 {
        let l = random_layout(&mut r, &format!("l{i}"), 30, &alphabet);
        identity += usize::from(cdm(&l, &l, DEFAULT_TAU).map(|s| s.f1) != Ok(1.0));
    }
    let mut symmetry = 0;
    for i in 0..500 {
        let a = random_layout(&mut r, &format!("a{i}"), 20, &alphabet);
        let b = random_layout(&mut r, &format!("b{i}"), 20, &alphabet);
        let (ab, ba) = (cdm(&a, &b, DEFAULT_TAU).unwrap(), cdm(&b, &a, DEFAULT_TAU).unwrap());
        symmetry += usize::from(ab.matched != ba.matched || ab.f1 != ba.f1);
    }
    let detail = format!("identity 100 layouts, {identity} failures; symmetry 500 pairs, {symmetry} failures");
    if identity + symmetry == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn matching_optimality() -> Outcome {
    let mut r = rng(5);
    let alphabet = ['a', 'b', 'x'];
    let mut wrong = 0;
    for _ in 0..500 {
        let pred = random_layout(&mut r, "p", 8, &alphabet);
        let gt = random_layout(&mut r, "g", 8, &alphabet);
        let m = match_glyphs(&pred, &gt, DEFAULT_TAU).unwrap();
        wrong += usize::from(m.len() != brute_force_matching(&pred, &gt, DEFAULT_TAU).0);
    }
    let detail = format!("500 pairs, {wrong} cardinality mismatches");
    if wrong == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn dedup_split_conservation() -> Outcome {
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus60");
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = SplitConfig { test_per_level: 10, seed: 2024 };
    struct Run {
        stats: Vec<DedupStats>,
        train: Vec<u8>,
        test: Vec<u8>,
        train_keys: HashSet<u128>,
        test_keys: HashSet<u128>,
    }
    let run = |tag: &str| -> Result<Run, String> {
        let pages = load_corpus(&corpus).map_err(|e| e.to_string())?;
        if pages.len() != 60 {
            return Err(format!("expected 60 pages, found {}", pages.len()));
        }
        let (records, _) = Extractor::default().process_corpus(&pages);
        let outcome = dedup::dedup(records);
        let split = dedup::split(&outcome.kept, &cfg).map_err(|e| e.to_string())?;
        let mut stats = outcome.stats.clone();
        DedupStats::record_split(&mut stats, &split);
        let (train_path, test_path) = (dir.path().join(format!("train-{tag}")), dir.path().join(format!("test-{tag}")));
        jsonl::write(&train_path, &split.train).map_err(|e| e.to_string())?;
        jsonl::write(&test_path, &split.test).map_err(|e| e.to_string())?;
        let keys = |rs: &[formulakit::record::FormulaRecord]| rs.iter().map(|r| canonical_key(r).unwrap().0).collect();
        Ok(Run {
            stats,
            train: std::fs::read(train_path).map_err(|e| e.to_string())?,
            test: std::fs::read(test_path).map_err(|e| e.to_string())?,
            train_keys: keys(&split.train),
            test_keys: keys(&split.test),
        })
    };
    let (a, b) = (run("a")?, run("b")?);
    let stats = &a.stats;

    let balanced = stats.iter().all(|s| s.before == s.kept + s.dropped && s.kept == s.train + s.test);
    let shared = a.train_keys.intersection(&a.test_keys).count();
    let identical = a.train == b.train && a.test == b.test;
    let counts: Vec<String> = stats
        .iter()
        .map(|s| format!("{} {}={}+{} ({}+{})", s.level, s.before, s.kept, s.dropped, s.train, s.test))
        .collect();
    let detail = format!("{}; shared keys {shared}; reruns identical {identical}", counts.join(", "));
    if balanced && shared == 0 && identical && stats.iter().all(|s| s.dropped > 0) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn table_shape() -> Outcome {
    let scores: Vec<ScoreRecord> = [(SampleLevel::Line, 0.121), (SampleLevel::Paragraph, 0.121), (SampleLevel::Page, 0.251)]
        .into_iter()
        .map(|(level, ed)| ScoreRecord {
            record_id: level.tag().into(),
            level,
            subset: level.label().into(),
            ed: EdScore::new(ed).unwrap(),
            cdm: None,
            error: None,
        })
        .collect();
    let summaries = aggregate(&scores).map_err(|e| e.to_string())?;
    let avg = summaries.last().unwrap().mean_ed;
    let exact = (avg - (0.121 + 0.121 + 0.251) / 3.0).abs() < 1e-12;
    let table = render_table(&[SystemSummary { name: "DocTron-Formula".into(), summaries }], Metric::Ed, Format::Markdown);
    let row = table.lines().last().unwrap_or_default().to_string();
    if exact && row == "| DocTron-Formula | 0.121 | 0.121 | 0.251 | 0.164 |" {
        Ok(row)
    } else {
        Err(format!("avg {avg}, row {row}"))
    }
}

fn recognizer_client() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let items: Vec<EvalItem> = (0..10)
        .map(|i| {
            let id = format!("r{i}");
            let image_path = dir.path().join(format!("{id}.png"));
            std::fs::write(&image_path, &id).unwrap();
            EvalItem { record_id: id, level: SampleLevel::Line, gt_latex: "x".into(), image_path }
        })
        .collect();
    let cfg = |url: &str, parallelism| EndpointConfig {
        base_url: url.into(),
        model_name: "mock".into(),
        parallelism,
        backoff_ms: 1,
        ..Default::default()
    };

    let server = MockServer::start(Duration::from_millis(50), |image, _| {
        let i: u64 = image[1..].parse().unwrap();
        std::thread::sleep(Duration::from_millis(5 * (10 - i)));
        Reply::content(image)
    });
    let out = Recognizer::new(cfg(&server.url, 4)).map_err(|e| e.to_string())?.run_batch(&items);
    let ordered = out.iter().zip(&items).all(|(o, i)| o.record_id == i.record_id && o.pred_latex == i.record_id);
    let in_flight = server.max_in_flight();

    let failing = MockServer::start(Duration::ZERO, |_, _| Reply::status(500));
    let rec = Recognizer::new(cfg(&failing.url, 1)).map_err(|e| e.to_string())?.recognize(&items[0]);
    let retries_ok = rec.attempt == 3 && rec.error.is_some() && failing.hits().len() == 3;

    let fixtures = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/worker/layouts.jsonl");
    let frozen = render::read_layouts(&fixtures).map(|l| l.len()).unwrap_or(0);

    let detail = format!(
        "order kept {ordered}; max in flight {in_flight} of 4; attempts on 500s {}; frozen layouts ingested {frozen}",
        rec.attempt
    );
    if ordered && in_flight == 4 && retries_ok && frozen == 3 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let criteria: [(&str, Check); 8] = [
        ("ED oracle equivalence", ed_oracle),
        ("ED laws", ed_laws),
        ("Lexer roundtrip and normalize idempotence", lexer_roundtrip),
        ("CDM identity and symmetry", cdm_identity_symmetry),
        ("Matching optimality", matching_optimality),
        ("Dedup/split conservation", dedup_split_conservation),
        ("Table-shape reproduction", table_shape),
        ("Recognizer client", recognizer_client),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match std::panic::catch_unwind(check) {
            Ok(Ok(detail)) => println!("PASS  {name}: {detail}"),
            Ok(Err(detail)) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL  {name}: panicked");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
