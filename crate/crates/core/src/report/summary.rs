//! Per-subset means and the unweighted average across subsets.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::score::ScoreRecord;
use crate::record::SampleLevel;

pub const AVERAGE_LABEL: &str = "Avg.";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsSummary {
    pub subset: String,
    pub n: usize,
    pub mean_ed: f64,
    /// Absent when the run was scored without layouts.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_cdm_f1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReportError {
    #[error("no scores to aggregate")]
    EmptyInput,
    #[error("record `{0}` has no CDM score while others do")]
    MissingCdm(String),
}

fn subset_rank(subset: &str) -> (usize, &str) {
    let rank = SampleLevel::ALL.iter().position(|l| l.label() == subset).unwrap_or(SampleLevel::ALL.len());
    (rank, subset)
}

/// One summary per subset (levels first, in Line, Paragraph, Page order,
/// then other subsets by name) followed by the `Avg.` row.
pub fn aggregate(scores: &[ScoreRecord]) -> Result<Vec<MetricsSummary>, ReportError> {
    if scores.is_empty() {
        return Err(ReportError::EmptyInput);
    }
    let with_cdm = scores.iter().any(|s| s.cdm.is_some());
    let mut subsets: Vec<&str> = scores.iter().map(|s| s.subset.as_str()).collect();
    subsets.sort_by_key(|s| subset_rank(s));
    subsets.dedup();

    let mut out = Vec::with_capacity(subsets.len() + 1);
    for subset in subsets {
        let group: Vec<&ScoreRecord> = scores.iter().filter(|s| s.subset == subset).collect();
        let n = group.len();
        let mean_ed = group.iter().map(|s| s.ed.value()).sum::<f64>() / n as f64;
        let mean_cdm_f1 = if with_cdm {
            let mut total = 0.0;
            for s in &group {
                total += match (&s.cdm, &s.error) {
                    (Some(c), None) => c.f1,
                    (_, Some(_)) => 0.0,
                    (None, None) => return Err(ReportError::MissingCdm(s.record_id.clone())),
                };
            }
            Some(total / n as f64)
        } else {
            None
        };
        out.push(MetricsSummary { subset: subset.to_string(), n, mean_ed, mean_cdm_f1 });
    }
    out.push(average(&out));
    Ok(out)
}

/// Unweighted mean of subset means; `n` is the total record count.
pub fn average(subsets: &[MetricsSummary]) -> MetricsSummary {
    let k = subsets.len() as f64;
    MetricsSummary {
        subset: AVERAGE_LABEL.to_string(),
        n: subsets.iter().map(|s| s.n).sum(),
        mean_ed: subsets.iter().map(|s| s.mean_ed).sum::<f64>() / k,
        mean_cdm_f1: subsets.iter().map(|s| s.mean_cdm_f1).sum::<Option<f64>>().map(|t| t / k),
    }
}
