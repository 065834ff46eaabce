//! Text and render-based scores.

mod cdm;
mod edit_distance;
mod matching;

pub use cdm::{cdm, score_layouts, CdmError, CdmScore};
pub use edit_distance::{edit_distance, edit_distance_with, levenshtein, EdConfig, EdScore};
pub use matching::{match_glyphs, maximum_matching, MatchError, Matching};

/// Default matching radius in unit-box coordinates.
pub const DEFAULT_TAU: f64 = 0.25;
