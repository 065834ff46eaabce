//! Character-level overlap of two rendered layouts.

use serde::{Deserialize, Serialize};

use super::matching::{match_glyphs, scoring_glyphs, MatchError};
use crate::render::{normalize_layout, GlyphLayout, LayoutError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CdmScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub matched: usize,
    pub pred_total: usize,
    pub gt_total: usize,
}

impl CdmScore {
    /// Score of an errored prediction.
    pub const ZERO: CdmScore =
        CdmScore { precision: 0.0, recall: 0.0, f1: 0.0, matched: 0, pred_total: 0, gt_total: 0 };

    pub fn from_counts(matched: usize, pred_total: usize, gt_total: usize) -> Self {
        let ratio = |total: usize, other: usize| match (total, other) {
            (0, 0) => 1.0,
            (0, _) => 0.0,
            (t, _) => matched as f64 / t as f64,
        };
        let f1 = if pred_total + gt_total == 0 {
            1.0
        } else {
            2.0 * matched as f64 / (pred_total + gt_total) as f64
        };
        Self {
            precision: ratio(pred_total, gt_total),
            recall: ratio(gt_total, pred_total),
            f1,
            matched,
            pred_total,
            gt_total,
        }
    }
}

/// Scores two normalized layouts. Layouts that failed to render count as
/// having no glyphs.
pub fn cdm(pred: &GlyphLayout, gt: &GlyphLayout, tau: f64) -> Result<CdmScore, MatchError> {
    let matching = match_glyphs(pred, gt, tau)?;
    let pred_total = scoring_glyphs(pred)?.len();
    let gt_total = scoring_glyphs(gt)?.len();
    Ok(CdmScore::from_counts(matching.len(), pred_total, gt_total))
}

/// Normalizes raw worker layouts and scores them. A render failure on either
/// side is scored as zero glyphs; degenerate bounds are reported.
pub fn score_layouts(pred: &GlyphLayout, gt: &GlyphLayout, tau: f64) -> Result<CdmScore, CdmError> {
    let prepare = |layout: &GlyphLayout| match normalize_layout(layout) {
        Ok(l) => Ok(l),
        Err(LayoutError::RenderFailed { .. }) => Ok(layout.clone()),
        Err(e) => Err(e),
    };
    let (p, g) = (prepare(pred)?, prepare(gt)?);
    Ok(cdm(&p, &g, tau)?)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CdmError {
    #[error(transparent)]
    Layout(#[from] LayoutError),
    #[error(transparent)]
    Match(#[from] MatchError),
}
