//! Per-record scores.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::client::EvalRecord;
use crate::metrics::{edit_distance_with, score_layouts, CdmError, CdmScore, EdConfig, EdScore};
use crate::record::SampleLevel;
use crate::render::GlyphLayout;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub record_id: String,
    pub level: SampleLevel,
    /// Column the record is reported under; the level label unless set otherwise.
    pub subset: String,
    pub ed: EdScore,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cdm: Option<CdmScore>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreConfig {
    pub ed: EdConfig,
    pub tau: f64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        Self { ed: EdConfig::default(), tau: crate::metrics::DEFAULT_TAU }
    }
}

/// Layouts keyed by `record_id`.
#[derive(Debug, Clone, Copy)]
pub struct Layouts<'a> {
    pub gt: &'a HashMap<String, GlyphLayout>,
    /// Records absent here are scored as failed renders.
    pub pred: &'a HashMap<String, GlyphLayout>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoreError {
    #[error("no ground-truth layout for `{0}`")]
    MissingGroundTruth(String),
    #[error("record `{record_id}`: {source}")]
    Cdm { record_id: String, source: CdmError },
}

/// Scores one prediction. Errored predictions get the worst ED and, when
/// layouts are supplied, a zero CDM.
pub fn score_record(eval: &EvalRecord, layouts: Option<Layouts<'_>>, cfg: &ScoreConfig) -> Result<ScoreRecord, ScoreError> {
    let mut out = ScoreRecord {
        record_id: eval.record_id.clone(),
        level: eval.level,
        subset: eval.level.label().to_string(),
        ed: EdScore::WORST,
        cdm: None,
        error: eval.error.clone(),
    };
    if let Some(layouts) = layouts {
        let gt = layouts.gt.get(&eval.record_id).ok_or_else(|| ScoreError::MissingGroundTruth(eval.record_id.clone()))?;
        out.cdm = Some(if eval.is_ok() {
            let failed;
            let pred = match layouts.pred.get(&eval.record_id) {
                Some(p) => p,
                None => {
                    failed = GlyphLayout::failed(eval.record_id.clone(), "no predicted layout");
                    &failed
                }
            };
            score_layouts(pred, gt, cfg.tau)
                .map_err(|source| ScoreError::Cdm { record_id: eval.record_id.clone(), source })?
        } else {
            CdmScore::ZERO
        });
    }
    if eval.is_ok() {
        out.ed = edit_distance_with(&eval.pred_latex, &eval.gt_latex, &cfg.ed);
    }
    Ok(out)
}

/// Scores every prediction in parallel, keeping input order.
pub fn score_all(evals: &[EvalRecord], layouts: Option<Layouts<'_>>, cfg: &ScoreConfig) -> Result<Vec<ScoreRecord>, ScoreError> {
    evals.par_iter().map(|e| score_record(e, layouts, cfg)).collect()
}
