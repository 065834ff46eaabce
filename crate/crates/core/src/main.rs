use std::collections::HashMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use formulakit::client::{EndpointConfig, EvalItem, EvalRecord, PredictionCache, Recognizer};
use formulakit::dedup::{self, DedupConfig, DedupStats, NearDuplicateConfig, SplitConfig};
use formulakit::extract::{self, ExtractConfig, Extractor};
use formulakit::jsonl::{self, JsonlError};
use formulakit::lexer::NormalizeOptions;
use formulakit::metrics::{EdConfig, DEFAULT_TAU};
use formulakit::record::{FormulaRecord, SampleLevel};
use formulakit::render::{self, BridgeError, GlyphLayout, ManifestEntry};
use formulakit::report::{self, Format, Layouts, Metric, RunConfig, ScoreConfig, ScoreRecord, SystemSummary};

#[derive(Parser)]
#[command(name = "formulakit", version, about = "Formula recognition dataset and evaluation pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract formula records from a corpus of crawled pages
    Extract {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        stats: PathBuf,
        /// Minimum formulas on a page for a page-level sample
        #[arg(long, default_value_t = 2)]
        page_min_spans: usize,
        #[arg(long, default_value_t = 2000)]
        max_inline_len: usize,
    },
    /// Drop records whose canonical form repeats within a level
    Dedup {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        stats: PathBuf,
        /// Write records that failed to lex here
        #[arg(long)]
        quarantine: Option<PathBuf>,
        /// Also drop near duplicates (MinHash over token shingles)
        #[arg(long)]
        near_dup: bool,
        #[arg(long, default_value_t = 0.9)]
        near_dup_threshold: f64,
        #[arg(long)]
        strip_left_right: bool,
    },
    /// Seeded per-level train/test split
    Split {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value_t = 1000)]
        test_per_level: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out_train: PathBuf,
        #[arg(long)]
        out_test: PathBuf,
        /// Write the sorted test ids with the seed
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Dedup stats to complete with split counts
        #[arg(long, requires = "stats_out")]
        stats_in: Option<PathBuf>,
        #[arg(long, requires = "stats_in")]
        stats_out: Option<PathBuf>,
    },
    /// Write a render manifest for records or predictions
    Manifest {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Input is a predictions file; successful predictions are rendered
        #[arg(long)]
        from_predictions: bool,
    },
    /// Render a manifest with the worker, or ingest pre-rendered layouts
    Render {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, conflicts_with = "layouts", required_unless_present = "layouts")]
        worker: Option<String>,
        #[arg(long)]
        layouts: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Query a recognizer endpoint for every test record
    Predict {
        #[arg(long)]
        test: PathBuf,
        /// Directory holding `{record_id}.{png,jpg,...}`
        #[arg(long)]
        images: PathBuf,
        #[arg(long)]
        endpoint: PathBuf,
        /// Predictions; reruns only re-send records without a successful entry
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        parallelism: Option<usize>,
    },
    /// Score predictions by edit distance and, given layouts, CDM
    Score {
        #[arg(long, requires = "pred_layouts")]
        gt: Option<PathBuf>,
        #[arg(long)]
        pred_latex: PathBuf,
        #[arg(long, requires = "gt")]
        pred_layouts: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: f64,
        /// Compare raw strings instead of canonical forms
        #[arg(long)]
        raw_ed: bool,
        #[arg(long)]
        strip_left_right: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize scores per level into a comparison table
    Report {
        /// Scores file, optionally `NAME=PATH`; repeat for several systems
        #[arg(long, required = true)]
        scores: Vec<String>,
        #[arg(long, value_enum, default_value_t = FormatArg::Markdown)]
        format: FormatArg,
        #[arg(long, value_enum, default_value_t = MetricArg::Both)]
        metric: MetricArg,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Markdown,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MetricArg {
    Ed,
    Cdm,
    Both,
}

enum Failure {
    Config(String),
    Data(String),
}

impl Failure {
    fn config(e: impl Display) -> Self {
        Failure::Config(e.to_string())
    }

    fn data(e: impl Display) -> Self {
        Failure::Data(e.to_string())
    }
}

type Result<T> = std::result::Result<T, Failure>;

/// Settings stored next to a scores file so reports can state them.
#[derive(Debug, Serialize, Deserialize)]
struct ScoreSettings {
    canonical_ed: bool,
    strip_left_right: bool,
    tau: f64,
    cdm: bool,
}

fn settings_path(scores: &Path) -> PathBuf {
    let mut name = scores.file_name().unwrap_or_default().to_os_string();
    name.push(".settings.json");
    scores.with_file_name(name)
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    jsonl::read(path).map_err(|e: JsonlError| Failure::data(format!("{}: {e}", path.display())))
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    jsonl::write(path, items).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("plain data serializes");
    fs::write(path, text + "\n").map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
}

fn bridge_failure(e: BridgeError) -> Failure {
    match e {
        BridgeError::Worker { .. } => Failure::config(e),
        other => Failure::data(other),
    }
}

fn layouts_by_id(path: &Path) -> Result<HashMap<String, GlyphLayout>> {
    let mut map = HashMap::new();
    for layout in render::read_layouts(path).map_err(bridge_failure)? {
        if map.contains_key(&layout.record_id) {
            return Err(Failure::Data(format!("{}: duplicate layout for `{}`", path.display(), layout.record_id)));
        }
        map.insert(layout.record_id.clone(), layout);
    }
    Ok(map)
}

const IMAGE_EXTENSIONS: [&str; 7] = ["png", "jpg", "jpeg", "webp", "gif", "svg", "bmp"];

fn image_for(dir: &Path, record_id: &str) -> PathBuf {
    IMAGE_EXTENSIONS
        .iter()
        .map(|ext| dir.join(format!("{record_id}.{ext}")))
        .find(|p| p.is_file())
        .unwrap_or_else(|| dir.join(format!("{record_id}.png")))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Extract { corpus, out, stats, page_min_spans, max_inline_len } => {
            RunConfig::default().input("corpus", &corpus).output("records", &out).output("stats", &stats).check().map_err(Failure::config)?;
            let pages = extract::load_corpus(&corpus).map_err(Failure::data)?;
            let extractor = Extractor::new(ExtractConfig { max_inline_len, page_min_spans });
            let (records, summary) = extractor.process_corpus(&pages);
            write_jsonl(&out, &records)?;
            write_json(&stats, &summary)?;
            eprintln!("{} pages, {} spans, {} records", summary.pages, summary.spans_found, records.len());
        }
        Command::Dedup { input, out, stats, quarantine, near_dup, near_dup_threshold, strip_left_right } => {
            let mut rc = RunConfig::default().input("records", &input).output("kept", &out).output("stats", &stats);
            if let Some(q) = &quarantine {
                rc = rc.output("quarantine", q);
            }
            rc.check().map_err(Failure::config)?;
            if !(0.0..=1.0).contains(&near_dup_threshold) {
                return Err(Failure::Config(format!("near-dup threshold must be in [0, 1], got {near_dup_threshold}")));
            }
            let records: Vec<FormulaRecord> = read_jsonl(&input)?;
            let cfg = DedupConfig {
                normalize: NormalizeOptions { strip_left_right },
                near_duplicates: near_dup.then(|| NearDuplicateConfig { threshold: near_dup_threshold, ..Default::default() }),
            };
            let outcome = dedup::dedup_with(records, &cfg);
            write_jsonl(&out, &outcome.kept)?;
            write_json(&stats, &outcome.stats)?;
            if let Some(q) = &quarantine {
                write_jsonl(q, &outcome.quarantined)?;
            }
            let dropped: usize = outcome.stats.iter().map(|s| s.dropped).sum();
            eprintln!("kept {}, dropped {dropped}", outcome.kept.len());
        }
        Command::Split { input, test_per_level, seed, out_train, out_test, manifest, stats_in, stats_out } => {
            let mut rc = RunConfig { seed: Some(seed), ..Default::default() }
                .input("records", &input)
                .output("train", &out_train)
                .output("test", &out_test);
            if let Some(m) = &manifest {
                rc = rc.output("split manifest", m);
            }
            if let (Some(i), Some(o)) = (&stats_in, &stats_out) {
                rc = rc.input("dedup stats", i).output("stats", o);
            }
            rc.check().map_err(Failure::config)?;
            let records: Vec<FormulaRecord> = read_jsonl(&input)?;
            let cfg = SplitConfig { test_per_level, seed };
            let split = dedup::split(&records, &cfg).map_err(Failure::data)?;
            write_jsonl(&out_train, &split.train)?;
            write_jsonl(&out_test, &split.test)?;
            if let Some(m) = &manifest {
                write_json(m, &split.manifest(&cfg))?;
            }
            if let (Some(i), Some(o)) = (&stats_in, &stats_out) {
                let mut stats: Vec<DedupStats> = read_json(i)?;
                DedupStats::record_split(&mut stats, &split);
                if let Some(bad) = stats.iter().find(|s| !s.is_consistent()) {
                    return Err(Failure::Data(format!("split does not match dedup stats for level {}", bad.level)));
                }
                write_json(o, &stats)?;
            }
            eprintln!("train {}, test {}", split.train.len(), split.test.len());
        }
        Command::Manifest { input, out, from_predictions } => {
            RunConfig::default().input("records", &input).output("manifest", &out).check().map_err(Failure::config)?;
            let entries: Vec<ManifestEntry> = if from_predictions {
                let preds: Vec<EvalRecord> = read_jsonl(&input)?;
                preds
                    .iter()
                    .filter(|p| p.is_ok() && !p.pred_latex.trim().is_empty())
                    .map(|p| ManifestEntry {
                        record_id: p.record_id.clone(),
                        latex: p.pred_latex.clone(),
                        display_mode: p.level == SampleLevel::Line,
                        scale: 1.0,
                    })
                    .collect()
            } else {
                let records: Vec<FormulaRecord> = read_jsonl(&input)?;
                records.iter().map(ManifestEntry::for_record).collect()
            };
            let n = render::write_manifest_entries(&entries, &out).map_err(bridge_failure)?;
            eprintln!("{n} manifest entries");
        }
        Command::Render { manifest, worker, layouts, out } => {
            let mut rc = RunConfig::default().input("manifest", &manifest).output("layouts", &out);
            if let Some(l) = &layouts {
                rc = rc.input("layouts", l);
            }
            rc.check().map_err(Failure::config)?;
            let entries = render::read_manifest(&manifest).map_err(bridge_failure)?;
            let source = match (&worker, &layouts) {
                (Some(cmd), _) => {
                    render::run_worker(cmd, &manifest, &out).map_err(bridge_failure)?;
                    out.clone()
                }
                (None, Some(l)) => l.clone(),
                (None, None) => unreachable!("clap requires one of --worker/--layouts"),
            };
            let parsed = render::read_layouts(&source).map_err(bridge_failure)?;
            let coverage = render::check_coverage(&entries, &parsed);
            if !coverage.is_complete() {
                return Err(Failure::Data(format!(
                    "layouts do not cover the manifest: {} missing, {} unexpected, {} duplicated",
                    coverage.missing.len(),
                    coverage.unexpected.len(),
                    coverage.duplicated.len()
                )));
            }
            render::write_layouts(&parsed, &out).map_err(Failure::data)?;
            let failed = parsed.iter().filter(|l| !l.render_ok).count();
            eprintln!("{} layouts, {failed} failed renders", parsed.len());
        }
        Command::Predict { test, images, endpoint, out, parallelism } => {
            RunConfig { endpoint: Some(endpoint.clone()), ..Default::default() }
                .input("test records", &test)
                .input("image directory", &images)
                .output("predictions", &out)
                .check()
                .map_err(Failure::config)?;
            let mut cfg: EndpointConfig = read_json(&endpoint).map_err(|f| match f {
                Failure::Data(m) | Failure::Config(m) => Failure::Config(m),
            })?;
            if let Some(p) = parallelism {
                cfg.parallelism = p;
            }
            let recognizer = Recognizer::new(cfg).map_err(Failure::config)?;
            let records: Vec<FormulaRecord> = read_jsonl(&test)?;
            let items: Vec<EvalItem> = records
                .iter()
                .map(|r| EvalItem {
                    record_id: r.record_id.clone(),
                    level: r.level,
                    gt_latex: r.latex.clone(),
                    image_path: image_for(&images, &r.record_id),
                })
                .collect();
            let mut cache = PredictionCache::open(&out).map_err(Failure::data)?;
            let results = recognizer.run_batch_cached(&items, &mut cache).map_err(Failure::data)?;
            cache.compact(&results).map_err(Failure::data)?;
            let failed = results.iter().filter(|r| !r.is_ok()).count();
            eprintln!("{} predictions, {failed} errors", results.len());
        }
        Command::Score { gt, pred_latex, pred_layouts, tau, raw_ed, strip_left_right, out } => {
            let mut rc = RunConfig { tau: Some(tau), ..Default::default() }.input("predictions", &pred_latex).output("scores", &out);
            if let (Some(g), Some(p)) = (&gt, &pred_layouts) {
                rc = rc.input("ground-truth layouts", g).input("predicted layouts", p);
            }
            rc.check().map_err(Failure::config)?;
            let evals: Vec<EvalRecord> = read_jsonl(&pred_latex)?;
            let normalize = NormalizeOptions { strip_left_right };
            let cfg = ScoreConfig { ed: EdConfig { canonicalize: !raw_ed, normalize }, tau };
            let layout_maps = match (&gt, &pred_layouts) {
                (Some(g), Some(p)) => Some((layouts_by_id(g)?, layouts_by_id(p)?)),
                _ => None,
            };
            let layouts = layout_maps.as_ref().map(|(gt, pred)| Layouts { gt, pred });
            let scores = report::score_all(&evals, layouts, &cfg).map_err(Failure::data)?;
            write_jsonl(&out, &scores)?;
            let settings = ScoreSettings { canonical_ed: !raw_ed, strip_left_right, tau, cdm: layouts.is_some() };
            write_json(&settings_path(&out), &settings)?;
            eprintln!("{} scores", scores.len());
        }
        Command::Report { scores, format, metric, out } => {
            let named: Vec<(String, PathBuf)> = scores
                .iter()
                .map(|s| match s.split_once('=') {
                    Some((name, path)) if !name.is_empty() => (name.to_string(), PathBuf::from(path)),
                    _ => {
                        let path = PathBuf::from(s);
                        let stem = path.file_stem().map(|x| x.to_string_lossy().into_owned()).unwrap_or_else(|| s.clone());
                        (stem, path)
                    }
                })
                .collect();
            let mut rc = RunConfig::default().output("report", &out);
            for (_, path) in &named {
                rc = rc.input("scores", path);
            }
            rc.check().map_err(Failure::config)?;

            let mut systems = Vec::new();
            let mut notes = Vec::new();
            for (name, path) in &named {
                let records: Vec<ScoreRecord> = read_jsonl(path)?;
                let summaries = report::aggregate(&records).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
                let settings_file = settings_path(path);
                let note = if settings_file.exists() {
                    let s: ScoreSettings = read_json(&settings_file)?;
                    format!(
                        "{name}: ed={}, strip_left_right={}, tau={}, cdm={}",
                        if s.canonical_ed { "canonical" } else { "raw" },
                        s.strip_left_right,
                        s.tau,
                        s.cdm
                    )
                } else {
                    format!("{name}: scoring settings unknown")
                };
                notes.push(note);
                systems.push(SystemSummary { name: name.clone(), summaries });
            }
            let metrics: &[Metric] = match metric {
                MetricArg::Ed => &[Metric::Ed],
                MetricArg::Cdm => &[Metric::Cdm],
                MetricArg::Both => &[Metric::Ed, Metric::Cdm],
            };
            let text = match format {
                FormatArg::Csv => {
                    if metrics.len() > 1 {
                        return Err(Failure::Config("CSV output holds one metric; pass --metric ed or --metric cdm".into()));
                    }
                    report::render_table(&systems, metrics[0], Format::Csv)
                }
                FormatArg::Markdown => {
                    let mut text: String = notes.iter().map(|n| format!("<!-- {n} -->\n")).collect();
                    for m in metrics {
                        text.push('\n');
                        text.push_str(&report::render_table(&systems, *m, Format::Markdown));
                        text.push('\n');
                        text.push_str(m.caption());
                        text.push('\n');
                    }
                    text
                }
            };
            fs::write(&out, text).map_err(|e| Failure::data(format!("{}: {e}", out.display())))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("data error: {msg}");
            ExitCode::from(3)
        }
    }
}
