use std::collections::BTreeMap;

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use amq_core::pipeline::{QueryInput, RetrievalResult, ScoredTerm};
use amq_core::report::ExportDocument;
use amq_core::TermCode;

use crate::error::ApiError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecisionState {
    Included,
    Excluded,
    Undecided,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionStatus {
    Open,
    Finalized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    Csv,
    Json,
}

impl std::str::FromStr for ExportFormat {
    type Err = ApiError;

    fn from_str(s: &str) -> Result<Self, ApiError> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(ApiError::bad_request(format!(
                "unknown export format {other:?} (expected csv or json)"
            ))),
        }
    }
}

/// 128 random bits, base64url without padding.
pub fn new_session_id() -> String {
    URL_SAFE_NO_PAD.encode(rand::random::<[u8; 16]>())
}

/// A reviewer's working copy of one query result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReviewSession {
    pub session_id: String,
    pub query_input: QueryInput,
    /// Result re-thresholded at `active_threshold`; scores never change.
    pub result: RetrievalResult,
    /// Threshold picked by the pipeline when the session was created.
    pub initial_threshold: f64,
    pub active_threshold: f64,
    /// Explicit decisions only; undecided codes are absent.
    pub decisions: BTreeMap<TermCode, DecisionState>,
    pub created: DateTime<Utc>,
    pub updated: DateTime<Utc>,
    pub status: SessionStatus,
    /// Set on finalize.
    pub final_codes: Option<Vec<TermCode>>,
}

impl ReviewSession {
    pub fn new(id: String, query_input: QueryInput, result: RetrievalResult) -> Self {
        let now = Utc::now();
        ReviewSession {
            session_id: id,
            query_input,
            initial_threshold: result.decision.threshold,
            active_threshold: result.decision.threshold,
            result,
            decisions: BTreeMap::new(),
            created: now,
            updated: now,
            status: SessionStatus::Open,
            final_codes: None,
        }
    }

    /// `updated` strictly increases with every mutation, even when the
    /// clock does not.
    fn touch(&mut self) {
        let now = Utc::now();
        self.updated = if now > self.updated {
            now
        } else {
            self.updated + Duration::microseconds(1)
        };
    }

    fn ensure_open(&self) -> Result<(), ApiError> {
        match self.status {
            SessionStatus::Open => Ok(()),
            SessionStatus::Finalized => Err(ApiError::finalized(&self.session_id)),
        }
    }

    pub fn set_threshold(&mut self, threshold: f64) -> Result<(), ApiError> {
        self.ensure_open()?;
        if !(-1.0..=1.0).contains(&threshold) {
            return Err(ApiError::bad_request(format!(
                "threshold {threshold} not in [-1, 1]"
            )));
        }
        self.result = self.result.apply_threshold(threshold);
        self.active_threshold = threshold;
        self.touch();
        Ok(())
    }

    pub fn set_decision(&mut self, code: TermCode, state: DecisionState) -> Result<(), ApiError> {
        self.ensure_open()?;
        if !self.result.all_scored.iter().any(|t| t.code == code) {
            return Err(ApiError::not_found(format!(
                "code {code} is not in this session"
            )));
        }
        match state {
            DecisionState::Undecided => self.decisions.remove(&code),
            s => self.decisions.insert(code, s),
        };
        self.touch();
        Ok(())
    }

    pub fn finalize(&mut self) -> Result<(), ApiError> {
        self.ensure_open()?;
        self.final_codes = Some(self.selected().map(|t| t.code).collect());
        self.status = SessionStatus::Finalized;
        self.touch();
        Ok(())
    }

    pub fn decision(&self, code: TermCode) -> DecisionState {
        self.decisions
            .get(&code)
            .copied()
            .unwrap_or(DecisionState::Undecided)
    }

    /// (retained ∪ included) \ excluded, in rank order. For a finalized
    /// session this is the frozen final list.
    pub fn selected(&self) -> impl Iterator<Item = &ScoredTerm> {
        self.result
            .all_scored
            .iter()
            .filter(move |t| match self.decision(t.code) {
                DecisionState::Included => true,
                DecisionState::Excluded => false,
                DecisionState::Undecided => t.retained,
            })
    }

    pub fn export(&self, format: ExportFormat) -> String {
        let doc = ExportDocument::new(
            &self.result,
            self.active_threshold,
            self.result.decision.source,
            self.selected(),
        );
        match format {
            ExportFormat::Csv => doc.to_csv(),
            ExportFormat::Json => doc.to_json(),
        }
    }

    pub fn counts(&self) -> SessionCounts {
        let count = |s| self.decisions.values().filter(|&&d| d == s).count();
        SessionCounts {
            total: self.result.all_scored.len(),
            retained: self.result.retained().count(),
            included: count(DecisionState::Included),
            excluded: count(DecisionState::Excluded),
            selected: self.selected().count(),
        }
    }

    pub fn view(&self) -> SessionView<'_> {
        SessionView {
            session: self,
            counts: self.counts(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SessionCounts {
    pub total: usize,
    pub retained: usize,
    pub included: usize,
    pub excluded: usize,
    /// Size of the list an export would contain.
    pub selected: usize,
}

/// Response shape: the stored record plus derived counts.
#[derive(Debug, Serialize)]
pub struct SessionView<'a> {
    #[serde(flatten)]
    pub session: &'a ReviewSession,
    pub counts: SessionCounts,
}
