//! Dataset construction and evaluation for mathematical formula recognition.
//!
//! The pipeline runs corpus pages through [`extract`] into formula records,
//! removes duplicates and splits them with [`dedup`], hands formulas to an
//! external render worker through [`render`], collects predictions from a
//! recognizer endpoint with [`client`], scores them with [`metrics`] and
//! summarizes the results with [`report`].

pub mod client;
pub mod dedup;
pub mod extract;
pub mod jsonl;
pub mod lexer;
pub mod metrics;
pub mod record;
pub mod render;
pub mod report;
