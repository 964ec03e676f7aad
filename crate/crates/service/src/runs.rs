use std::path::PathBuf;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Running,
    Done,
    Failed,
}

/// Request body of `POST /api/eval/runs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalRequest {
    pub gold_path: PathBuf,
    #[serde(default)]
    pub narrow_only: bool,
    /// `start:end:step`; the default grid when absent.
    #[serde(default)]
    pub grid: Option<String>,
    /// Probe side-table for free-text inputs; the server's table when absent.
    #[serde(default)]
    pub probes: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalRun {
    pub run_id: String,
    pub gold_path: PathBuf,
    pub config: EvalRequest,
    /// Grid actually used, in `start:end:step` or list form.
    pub grid: String,
    pub status: RunStatus,
    /// Report files; non-empty only when done.
    pub artifacts: Vec<PathBuf>,
    pub error: Option<String>,
    pub created: DateTime<Utc>,
    pub updated: DateTime<Utc>,
}

impl EvalRun {
    pub fn finish(&mut self, outcome: Result<Vec<PathBuf>, String>) {
        match outcome {
            Ok(files) => {
                self.status = RunStatus::Done;
                self.artifacts = files;
            }
            Err(message) => {
                self.status = RunStatus::Failed;
                self.artifacts.clear();
                self.error = Some(message);
            }
        }
        self.updated = Utc::now().max(self.updated);
    }
}
