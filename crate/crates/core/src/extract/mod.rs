//! Formula discovery in stored pages and assembly of line, paragraph and
//! page samples.
//!
//! Level assignment:
//! - every display-style span (`$$..$$`, `\[..\]`, environments) yields a
//!   line sample holding the bare formula;
//! - every text block (HTML block element or blank-line separated markdown
//!   paragraph) holding at least one span and at least one word outside the
//!   spans yields a paragraph sample with the text and delimiters intact;
//! - a page with at least [`ExtractConfig::page_min_spans`] spans yields one
//!   page sample with all of its blocks.

mod corpus;
mod spans;
mod text;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::record::{FormulaRecord, SampleLevel};

pub use corpus::{load_corpus, CorpusError};

use text::PlainText;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PageFormat {
    Html,
    Markdown,
}

/// One stored page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageDocument {
    pub page_id: String,
    #[serde(default)]
    pub url: String,
    pub format: PageFormat,
    pub body: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Delimiter {
    InlineDollar,
    DisplayDollar,
    InlineParen,
    DisplayBracket,
    Environment,
}

impl Delimiter {
    pub fn is_display(self) -> bool {
        matches!(self, Delimiter::DisplayDollar | Delimiter::DisplayBracket | Delimiter::Environment)
    }
}

/// A formula located in a page body. `start..end` covers the delimiters and
/// indexes the original body bytes; `latex` is the trimmed content.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FormulaSpan {
    pub start: usize,
    pub end: usize,
    pub delimiter: Delimiter,
    pub latex: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractConfig {
    /// Longest accepted `$..$` or `\(..\)` content, in bytes.
    pub max_inline_len: usize,
    /// Minimum span count for a page sample.
    pub page_min_spans: usize,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self { max_inline_len: 2000, page_min_spans: 2 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionStats {
    pub pages: usize,
    pub spans_found: usize,
    pub spans_dropped_lex_error: usize,
    pub records_per_level: BTreeMap<SampleLevel, usize>,
}

impl ExtractionStats {
    fn empty() -> Self {
        Self {
            records_per_level: SampleLevel::ALL.into_iter().map(|l| (l, 0)).collect(),
            ..Self::default()
        }
    }

    fn absorb(&mut self, page: &PageOutput) {
        self.pages += 1;
        self.spans_found += page.spans.len();
        self.spans_dropped_lex_error += page.dropped;
        for rec in &page.records {
            *self.records_per_level.entry(rec.level).or_default() += 1;
        }
    }
}

/// Spans of one page plus the number of candidate regions rejected by the lexer.
#[derive(Debug, Clone, Default)]
pub struct SpanScan {
    pub spans: Vec<FormulaSpan>,
    pub dropped: usize,
}

#[derive(Debug, Clone)]
pub struct PageOutput {
    pub spans: Vec<FormulaSpan>,
    pub dropped: usize,
    pub records: Vec<FormulaRecord>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Extractor {
    pub config: ExtractConfig,
}

impl Extractor {
    pub fn new(config: ExtractConfig) -> Self {
        Self { config }
    }

    pub fn scan(&self, page: &PageDocument) -> SpanScan {
        let text = PlainText::from_body(&page.body, page.format);
        let mut out = SpanScan::default();
        for block in text.blocks() {
            let scan = spans::scan_block(&text.text[block.clone()], block.start, self.config.max_inline_len);
            out.dropped += scan.dropped;
            out.spans.extend(scan.spans.into_iter().map(|raw| {
                let body = text.body_range(raw.start..raw.end);
                FormulaSpan { start: body.start, end: body.end, delimiter: raw.delimiter, latex: raw.latex }
            }));
        }
        out
    }

    pub fn build_samples(&self, page: &PageDocument, spans: &[FormulaSpan]) -> Vec<FormulaRecord> {
        let record = |level: SampleLevel, suffix: String, latex: String| FormulaRecord {
            record_id: format!("{}:{}", page.page_id, suffix),
            level,
            latex,
            source_page_id: page.page_id.clone(),
            dedup_key: None,
        };
        let mut records: Vec<FormulaRecord> = spans
            .iter()
            .filter(|s| s.delimiter.is_display())
            .enumerate()
            .map(|(n, s)| record(SampleLevel::Line, format!("line:{n}"), s.latex.clone()))
            .collect();

        let text = PlainText::from_body(&page.body, page.format);
        let blocks = text.blocks();
        let mut paragraphs = 0;
        for block in &blocks {
            let body = text.body_range(block.clone());
            let inside: Vec<_> = spans
                .iter()
                .filter(|s| s.start >= body.start && s.end <= body.end)
                .map(|s| text.text_range(s.start..s.end))
                .collect();
            if inside.is_empty() {
                continue;
            }
            let mut cursor = block.start;
            let mut has_word = false;
            for r in inside.iter().chain(std::iter::once(&(block.end..block.end))) {
                has_word |= text.text[cursor..r.start.max(cursor)].chars().any(char::is_alphanumeric);
                cursor = cursor.max(r.end);
            }
            if has_word {
                let latex = text.text[block.clone()].to_string();
                records.push(record(SampleLevel::Paragraph, format!("paragraph:{paragraphs}"), latex));
                paragraphs += 1;
            }
        }

        if !spans.is_empty() && spans.len() >= self.config.page_min_spans {
            let latex = blocks.iter().map(|b| &text.text[b.clone()]).collect::<Vec<_>>().join("\n\n");
            records.push(record(SampleLevel::Page, "page".into(), latex));
        }
        records
    }

    pub fn process_page(&self, page: &PageDocument) -> PageOutput {
        let scan = self.scan(page);
        let records = self.build_samples(page, &scan.spans);
        PageOutput { spans: scan.spans, dropped: scan.dropped, records }
    }

    /// Runs every page in parallel; output follows `page_id` order.
    pub fn process_corpus(&self, pages: &[PageDocument]) -> (Vec<FormulaRecord>, ExtractionStats) {
        let mut order: Vec<&PageDocument> = pages.iter().collect();
        order.sort_by(|a, b| a.page_id.cmp(&b.page_id));
        let outputs: Vec<PageOutput> = order.par_iter().map(|p| self.process_page(p)).collect();
        let mut stats = ExtractionStats::empty();
        let mut records = Vec::new();
        for out in outputs {
            stats.absorb(&out);
            records.extend(out.records);
        }
        (records, stats)
    }
}

/// Spans of `page` under the default configuration.
pub fn extract_spans(page: &PageDocument) -> Vec<FormulaSpan> {
    Extractor::default().scan(page).spans
}

pub fn build_samples(page: &PageDocument, spans: &[FormulaSpan]) -> Vec<FormulaRecord> {
    Extractor::default().build_samples(page, spans)
}
