//! Scoring predictions, aggregating per subset, and rendering tables.

mod score;
mod summary;
mod table;

use std::path::{Path, PathBuf};

pub use score::{score_all, score_record, Layouts, ScoreConfig, ScoreError, ScoreRecord};
pub use summary::{aggregate, average, MetricsSummary, ReportError, AVERAGE_LABEL};
pub use table::{render_table, Format, Metric, SystemSummary};

/// Paths and parameters of one pipeline command.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub inputs: Vec<(&'static str, PathBuf)>,
    pub outputs: Vec<(&'static str, PathBuf)>,
    pub tau: Option<f64>,
    pub seed: Option<u64>,
    pub endpoint: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RunConfigError {
    #[error("{what} `{}` does not exist", path.display())]
    MissingInput { what: &'static str, path: PathBuf },
    #[error("directory for {what} `{}` does not exist", path.display())]
    MissingOutputDir { what: &'static str, path: PathBuf },
    #[error("tau must be a positive number, got {0}")]
    InvalidTau(String),
}

impl RunConfig {
    pub fn input(mut self, what: &'static str, path: impl AsRef<Path>) -> Self {
        self.inputs.push((what, path.as_ref().to_path_buf()));
        self
    }

    pub fn output(mut self, what: &'static str, path: impl AsRef<Path>) -> Self {
        self.outputs.push((what, path.as_ref().to_path_buf()));
        self
    }

    /// Checks that inputs exist, output directories exist, and tau is usable.
    pub fn check(&self) -> Result<(), RunConfigError> {
        let endpoint = self.endpoint.iter().map(|p| ("endpoint config", p));
        for (what, path) in self.inputs.iter().map(|(w, p)| (*w, p)).chain(endpoint) {
            if !path.exists() {
                return Err(RunConfigError::MissingInput { what, path: path.clone() });
            }
        }
        for (what, path) in &self.outputs {
            let dir = path.parent().filter(|d| !d.as_os_str().is_empty());
            if dir.is_some_and(|d| !d.is_dir()) {
                return Err(RunConfigError::MissingOutputDir { what, path: path.clone() });
            }
        }
        if let Some(tau) = self.tau {
            if !(tau > 0.0 && tau.is_finite()) {
                return Err(RunConfigError::InvalidTau(tau.to_string()));
            }
        }
        Ok(())
    }
}
