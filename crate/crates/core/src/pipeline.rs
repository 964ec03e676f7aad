//! End-to-end retrieval: match input terms to seed terms, build the probe,
//! score the whole dictionary, pick a threshold and rank.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{normalize_name, Dictionary, TermCode};
use crate::embedding::{cosine, mean_composite, EmbeddingError, EmbeddingStore, EmbeddingVector};
use crate::lexical::{best_lexical, DEFAULT_LEXICAL_CUTOFF};
use crate::threshold::{
    auto_threshold, KneeScope, ThresholdDecision, ThresholdError, ThresholdSource,
    DEFAULT_KNEE_SENSITIVITY,
};

pub const MAX_SEMANTIC_TOP_K: usize = 3;
pub const DEFAULT_SEMANTIC_MARGIN: f64 = 0.02;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("query has no terms")]
    NoTerms,
    #[error("term {0:?} is empty after normalization")]
    EmptyTerm(String),
    #[error("no lexical match for {0:?} and no embedding available for it")]
    NoEmbedding(String),
    #[error("dictionary and embedding store disagree: {0}")]
    Inconsistent(EmbeddingError),
    #[error("{stage}: {source}")]
    Embedding {
        stage: &'static str,
        #[source]
        source: EmbeddingError,
    },
    #[error("threshold: {0}")]
    Threshold(#[from] ThresholdError),
}

impl PipelineError {
    /// Pipeline stage the error came from.
    pub fn stage(&self) -> &'static str {
        match self {
            PipelineError::Config(_) => "config",
            PipelineError::NoTerms | PipelineError::EmptyTerm(_) => "input",
            PipelineError::NoEmbedding(_) => "match",
            PipelineError::Inconsistent(_) => "setup",
            PipelineError::Embedding { stage, .. } => stage,
            PipelineError::Threshold(_) => "threshold",
        }
    }
}

/// How each dictionary term's relevance score is computed.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreAgainst {
    /// Cosine to the (single or composite) probe.
    #[default]
    Probe,
    /// Maximum of the cosine to the probe and to each seed vector.
    MaxProbeSeeds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub lexical_cutoff: f64,
    pub semantic_top_k: usize,
    pub semantic_margin: f64,
    pub knee_sensitivity: f64,
    pub knee_scope: KneeScope,
    pub manual_threshold: Option<f64>,
    pub include_matched_seeds: bool,
    pub score_against: ScoreAgainst,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            lexical_cutoff: DEFAULT_LEXICAL_CUTOFF,
            semantic_top_k: MAX_SEMANTIC_TOP_K,
            semantic_margin: DEFAULT_SEMANTIC_MARGIN,
            knee_sensitivity: DEFAULT_KNEE_SENSITIVITY,
            knee_scope: KneeScope::Full,
            manual_threshold: None,
            include_matched_seeds: true,
            score_against: ScoreAgainst::Probe,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: String| Err(PipelineError::Config(m));
        if !(self.lexical_cutoff > 0.0 && self.lexical_cutoff <= 1.0) {
            return bad(format!(
                "lexical_cutoff {} not in (0, 1]",
                self.lexical_cutoff
            ));
        }
        if !(1..=MAX_SEMANTIC_TOP_K).contains(&self.semantic_top_k) {
            return bad(format!(
                "semantic_top_k {} not in 1..=3",
                self.semantic_top_k
            ));
        }
        if !(self.semantic_margin >= 0.0 && self.semantic_margin.is_finite()) {
            return bad(format!(
                "semantic_margin {} must be >= 0",
                self.semantic_margin
            ));
        }
        if !(self.knee_sensitivity > 0.0 && self.knee_sensitivity.is_finite()) {
            return bad(format!(
                "knee_sensitivity {} must be positive",
                self.knee_sensitivity
            ));
        }
        if let Some(t) = self.manual_threshold {
            if !(-1.0..=1.0).contains(&t) {
                return bad(format!("manual_threshold {t} not in [-1, 1]"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryInput {
    pub terms: Vec<String>,
    #[serde(default)]
    pub config: PipelineConfig,
}

impl QueryInput {
    pub fn new(terms: impl IntoIterator<Item = impl Into<String>>) -> Self {
        QueryInput {
            terms: terms.into_iter().map(Into::into).collect(),
            config: PipelineConfig::default(),
        }
    }

    pub fn with_config(mut self, config: PipelineConfig) -> Self {
        self.config = config;
        self
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        if self.terms.is_empty() {
            return Err(PipelineError::NoTerms);
        }
        if let Some(t) = self.terms.iter().find(|t| normalize_name(t).is_empty()) {
            return Err(PipelineError::EmptyTerm(t.clone()));
        }
        self.config.validate()
    }
}

/// Supplies vectors for free text that has no lexical dictionary match.
pub trait EmbeddingProvider: Send + Sync {
    fn embed(&self, text: &str) -> Option<EmbeddingVector>;
}

/// Side table of probe vectors keyed by normalized query text.
///
/// File format: one `text<TAB>v1,v2,...` entry per line; blank lines and
/// lines starting with `#` are ignored. Vectors are normalized on load.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProbeTable {
    entries: HashMap<String, EmbeddingVector>,
}

#[derive(Debug, thiserror::Error)]
pub enum ProbeTableError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("probe table line {line}: {message}")]
    Malformed { line: usize, message: String },
}

impl ProbeTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, text: &str, vector: EmbeddingVector) {
        self.entries.insert(normalize_name(text), vector);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn parse_tsv(text: &str) -> Result<Self, ProbeTableError> {
        let mut table = ProbeTable::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let raw = raw.trim_end_matches('\r');
            if raw.trim().is_empty() || raw.starts_with('#') {
                continue;
            }
            let malformed = |message: String| ProbeTableError::Malformed { line, message };
            let (key, vals) = raw
                .split_once('\t')
                .ok_or_else(|| malformed("expected text<TAB>vector".into()))?;
            if normalize_name(key).is_empty() {
                return Err(malformed("empty query text".into()));
            }
            let values = vals
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| malformed(format!("bad vector component: {e}")))?;
            let v = EmbeddingVector::normalize(&values).map_err(|e| malformed(e.to_string()))?;
            table.insert(key, v);
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ProbeTableError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| ProbeTableError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_tsv(&text)
    }

    /// Serializes entries sorted by key, components with shortest round-trip
    /// formatting.
    pub fn to_tsv(&self) -> String {
        let mut keys: Vec<&String> = self.entries.keys().collect();
        keys.sort();
        let mut out = String::new();
        for k in keys {
            let comps: Vec<String> = self.entries[k]
                .values()
                .iter()
                .map(|x| x.to_string())
                .collect();
            out.push_str(k);
            out.push('\t');
            out.push_str(&comps.join(","));
            out.push('\n');
        }
        out
    }
}

impl EmbeddingProvider for ProbeTable {
    fn embed(&self, text: &str) -> Option<EmbeddingVector> {
        self.entries.get(&normalize_name(text)).cloned()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchKind {
    Lexical,
    Semantic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedMatch {
    pub input_term: String,
    pub codes: Vec<TermCode>,
    pub kind: MatchKind,
    /// Lexical ratio or top cosine that selected the seeds.
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeKind {
    Single,
    Composite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredTerm {
    pub code: TermCode,
    pub name: String,
    pub sim_best_pt: f64,
    pub rank: usize,
    pub retained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalResult {
    pub query: Vec<String>,
    pub matched_seeds: Vec<SeedMatch>,
    pub probe_kind: ProbeKind,
    pub decision: ThresholdDecision,
    /// Every dictionary term, in rank order.
    pub all_scored: Vec<ScoredTerm>,
    /// Whether seed codes are retained regardless of the threshold.
    pub seeds_forced: bool,
}

/// Sorts by descending score, ascending code on ties; assigns ranks from 1.
fn rank_order(scored: &mut [ScoredTerm]) {
    scored.sort_by(|a, b| {
        b.sim_best_pt
            .total_cmp(&a.sim_best_pt)
            .then(a.code.cmp(&b.code))
    });
    for (i, t) in scored.iter_mut().enumerate() {
        t.rank = i + 1;
    }
}

impl RetrievalResult {
    pub fn seed_codes(&self) -> BTreeSet<TermCode> {
        self.matched_seeds
            .iter()
            .flat_map(|s| s.codes.iter().copied())
            .collect()
    }

    /// Retained terms in rank order.
    pub fn retained(&self) -> impl Iterator<Item = &ScoredTerm> {
        self.all_scored.iter().filter(|t| t.retained)
    }

    pub fn retained_codes(&self) -> BTreeSet<TermCode> {
        self.retained().map(|t| t.code).collect()
    }

    /// Codes `apply_threshold(threshold)` would retain, without cloning.
    pub fn retained_codes_at(&self, threshold: f64) -> BTreeSet<TermCode> {
        let mut codes: BTreeSet<TermCode> = self
            .all_scored
            .iter()
            .take_while(|t| t.sim_best_pt >= threshold)
            .map(|t| t.code)
            .collect();
        if self.seeds_forced {
            codes.extend(self.seed_codes());
        }
        codes
    }

    pub fn threshold(&self) -> f64 {
        self.decision.threshold
    }

    fn mark_retained(&mut self) {
        let forced = if self.seeds_forced {
            self.seed_codes()
        } else {
            BTreeSet::new()
        };
        let t = self.decision.threshold;
        for term in &mut self.all_scored {
            term.retained = term.sim_best_pt >= t || forced.contains(&term.code);
        }
    }

    /// Re-thresholds the cached scores without re-scoring.
    pub fn apply_threshold(&self, threshold: f64) -> RetrievalResult {
        let mut out = self.clone();
        out.decision.threshold = threshold;
        out.decision.source = ThresholdSource::Manual;
        out.mark_retained();
        out
    }

    pub fn score_range(&self) -> Option<(f64, f64)> {
        let max = self.all_scored.first()?.sim_best_pt;
        let min = self.all_scored.last()?.sim_best_pt;
        Some((min, max))
    }
}

/// Matches one input term to 1..=3 seed codes.
///
/// A lexical match at or above the cutoff wins outright. Otherwise the term
/// is embedded through `provider` and the top cosine neighbour is taken,
/// together with up to `semantic_top_k - 1` further neighbours within
/// `semantic_margin` of it.
pub fn match_term(
    term: &str,
    dictionary: &Dictionary,
    store: &EmbeddingStore,
    provider: &dyn EmbeddingProvider,
    config: &PipelineConfig,
) -> Result<SeedMatch, PipelineError> {
    let lexical =
        best_lexical(term, dictionary).map_err(|_| PipelineError::EmptyTerm(term.to_string()))?;
    if let Some(m) = lexical.filter(|m| m.score >= config.lexical_cutoff) {
        return Ok(SeedMatch {
            input_term: term.to_string(),
            codes: vec![m.code],
            kind: MatchKind::Lexical,
            score: m.score,
        });
    }
    let vector = provider
        .embed(term)
        .ok_or_else(|| PipelineError::NoEmbedding(term.to_string()))?;
    let mut scores = store
        .score_all(&vector)
        .map_err(|source| PipelineError::Embedding {
            stage: "match",
            source,
        })?;
    scores.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let &(_, top) = scores
        .first()
        .ok_or_else(|| PipelineError::NoEmbedding(term.to_string()))?;
    let codes = scores
        .iter()
        .take(config.semantic_top_k)
        .take_while(|(_, s)| *s >= top - config.semantic_margin)
        .map(|(c, _)| *c)
        .collect();
    Ok(SeedMatch {
        input_term: term.to_string(),
        codes,
        kind: MatchKind::Semantic,
        score: top,
    })
}

/// Probe vector for the pooled, de-duplicated seed codes.
pub fn build_probe(
    codes: &[TermCode],
    store: &EmbeddingStore,
) -> Result<(EmbeddingVector, ProbeKind), PipelineError> {
    let unique: BTreeSet<TermCode> = codes.iter().copied().collect();
    let vectors = unique
        .iter()
        .map(|&c| {
            store.get(c).ok_or(PipelineError::Embedding {
                stage: "probe",
                source: EmbeddingError::MissingCode(c),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    match vectors.as_slice() {
        [] => Err(PipelineError::NoTerms),
        [single] => Ok((single.clone(), ProbeKind::Single)),
        many => {
            let refs: Vec<&EmbeddingVector> = many.iter().collect();
            let v = mean_composite(&refs).map_err(|source| PipelineError::Embedding {
                stage: "probe",
                source,
            })?;
            Ok((v, ProbeKind::Composite))
        }
    }
}

fn score_terms(
    probe: &EmbeddingVector,
    seeds: &BTreeSet<TermCode>,
    store: &EmbeddingStore,
    mode: ScoreAgainst,
) -> Result<Vec<(TermCode, f64)>, PipelineError> {
    let wrap = |source| PipelineError::Embedding {
        stage: "score",
        source,
    };
    let mut scores = store.score_all(probe).map_err(wrap)?;
    if mode == ScoreAgainst::MaxProbeSeeds {
        for &seed in seeds {
            let v = store
                .get(seed)
                .ok_or(wrap(EmbeddingError::MissingCode(seed)))?;
            let by_seed = store.score_all(&v).map_err(wrap)?;
            for (s, (_, other)) in scores.iter_mut().zip(by_seed) {
                s.1 = s.1.max(other);
            }
        }
    }
    Ok(scores)
}

/// Runs the full retrieval for one query. The output is a pure function of
/// its arguments.
pub fn run_query(
    input: &QueryInput,
    dictionary: &Dictionary,
    store: &EmbeddingStore,
    provider: &dyn EmbeddingProvider,
) -> Result<RetrievalResult, PipelineError> {
    input.validate()?;
    store
        .check_coverage(dictionary)
        .map_err(PipelineError::Inconsistent)?;
    let config = &input.config;

    let matched_seeds = input
        .terms
        .iter()
        .map(|t| match_term(t, dictionary, store, provider, config))
        .collect::<Result<Vec<_>, _>>()?;
    let pooled: Vec<TermCode> = matched_seeds
        .iter()
        .flat_map(|s| s.codes.iter().copied())
        .collect();
    let (probe, probe_kind) = build_probe(&pooled, store)?;
    let seeds: BTreeSet<TermCode> = pooled.into_iter().collect();

    let scores = score_terms(&probe, &seeds, store, config.score_against)?;
    let values: Vec<f64> = scores.iter().map(|(_, s)| *s).collect();
    let mut decision = auto_threshold(&values, config.knee_sensitivity, config.knee_scope)?;
    if let Some(t) = config.manual_threshold {
        decision.threshold = t;
        decision.source = ThresholdSource::Manual;
    }

    let mut all_scored: Vec<ScoredTerm> = scores
        .into_iter()
        .map(|(code, sim)| ScoredTerm {
            code,
            name: dictionary
                .get(code)
                .map(|t| t.name.clone())
                .unwrap_or_default(),
            sim_best_pt: sim,
            rank: 0,
            retained: false,
        })
        .collect();
    rank_order(&mut all_scored);

    let mut result = RetrievalResult {
        query: input.terms.clone(),
        matched_seeds,
        probe_kind,
        decision,
        all_scored,
        seeds_forced: config.include_matched_seeds,
    };
    result.mark_retained();
    Ok(result)
}

/// Runs many queries in parallel; results keep the input order.
pub fn run_batch(
    inputs: &[QueryInput],
    dictionary: &Dictionary,
    store: &EmbeddingStore,
    provider: &dyn EmbeddingProvider,
) -> Vec<Result<RetrievalResult, PipelineError>> {
    inputs
        .par_iter()
        .map(|input| run_query(input, dictionary, store, provider))
        .collect()
}

/// Cosine between two stored terms; used by fixtures and diagnostics.
pub fn term_similarity(store: &EmbeddingStore, a: TermCode, b: TermCode) -> Option<f64> {
    cosine(&store.get(a)?, &store.get(b)?).ok()
}
