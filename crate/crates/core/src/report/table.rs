//! Comparison tables with one row per system.

use std::fmt::Write;

use super::summary::{MetricsSummary, AVERAGE_LABEL};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Ed,
    Cdm,
}

impl Metric {
    fn value(self, s: &MetricsSummary) -> Option<f64> {
        match self {
            Metric::Ed => Some(s.mean_ed),
            Metric::Cdm => s.mean_cdm_f1,
        }
    }

    fn lower_is_better(self) -> bool {
        self == Metric::Ed
    }

    pub fn caption(self) -> &'static str {
        match self {
            Metric::Ed => "All metrics are ED, lower is better.",
            Metric::Cdm => "All metrics are CDM, higher is better.",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Markdown,
    Csv,
}

/// A named row of summaries, as returned by `aggregate`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSummary {
    pub name: String,
    pub summaries: Vec<MetricsSummary>,
}

/// Subset columns in first-seen order, `Avg.` last.
fn columns(systems: &[SystemSummary]) -> Vec<&str> {
    let mut cols: Vec<&str> = Vec::new();
    for s in systems.iter().flat_map(|sys| &sys.summaries) {
        if s.subset != AVERAGE_LABEL && !cols.contains(&s.subset.as_str()) {
            cols.push(&s.subset);
        }
    }
    if systems.iter().flat_map(|sys| &sys.summaries).any(|s| s.subset == AVERAGE_LABEL) {
        cols.push(AVERAGE_LABEL);
    }
    cols
}

fn cell(sys: &SystemSummary, col: &str, metric: Metric) -> Option<f64> {
    sys.summaries.iter().find(|s| s.subset == col).and_then(|s| metric.value(s))
}

fn fixed(v: f64) -> String {
    format!("{v:.3}")
}

/// Renders `systems` as a table of 3-decimal means. In Markdown with more
/// than one system, the best printed value of each column is bold, ties
/// included. Missing values print as `-`.
pub fn render_table(systems: &[SystemSummary], metric: Metric, format: Format) -> String {
    let cols = columns(systems);
    let grid: Vec<Vec<Option<String>>> = systems
        .iter()
        .map(|sys| cols.iter().map(|c| cell(sys, c, metric).map(fixed)).collect())
        .collect();

    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let header = std::iter::once("Model").chain(cols.iter().copied());
            w.write_record(header).expect("write to memory");
            for (sys, row) in systems.iter().zip(&grid) {
                let cells = row.iter().map(|c| c.as_deref().unwrap_or("-"));
                w.write_record(std::iter::once(sys.name.as_str()).chain(cells)).expect("write to memory");
            }
            String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 input")
        }
        Format::Markdown => {
            let best: Vec<Option<String>> = (0..cols.len())
                .map(|j| {
                    if systems.len() < 2 {
                        return None;
                    }
                    // compare what is printed so ties after rounding are all marked
                    let printed = grid.iter().filter_map(|row| row[j].as_deref());
                    let parsed = printed.map(|v| (v.parse::<f64>().expect("formatted float"), v));
                    let pick = if metric.lower_is_better() {
                        parsed.min_by(|a, b| a.0.total_cmp(&b.0))
                    } else {
                        parsed.max_by(|a, b| a.0.total_cmp(&b.0))
                    };
                    pick.map(|(_, v)| v.to_string())
                })
                .collect();
            let mut out = String::new();
            let _ = writeln!(out, "| Model | {} |", cols.join(" | "));
            let _ = writeln!(out, "|---|{}", "---:|".repeat(cols.len()));
            for (sys, row) in systems.iter().zip(&grid) {
                let cells: Vec<String> = row
                    .iter()
                    .zip(&best)
                    .map(|(v, b)| match v {
                        None => "-".to_string(),
                        Some(v) if b.as_ref() == Some(v) => format!("**{v}**"),
                        Some(v) => v.clone(),
                    })
                    .collect();
                let _ = writeln!(out, "| {} | {} |", sys.name.replace('|', "\\|"), cells.join(" | "));
            }
            out
        }
    }
}
