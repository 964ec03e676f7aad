//! End-to-end evaluation of a gold query set: retrieval for every query
//! followed by the full analysis, shared by the CLI and the HTTP service.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::corpus::{Dictionary, GoldQuery};
use crate::embedding::EmbeddingStore;
use crate::evaluation::{evaluate, format_cutoff, narrow_only, EvalError, EvalReport, Grid};
use crate::pipeline::{
    run_batch, EmbeddingProvider, PipelineConfig, PipelineError, QueryInput, RetrievalResult,
};

#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error("query {query_id}: {stage} stage failed: {source}")]
    Query {
        query_id: String,
        stage: &'static str,
        #[source]
        source: PipelineError,
    },
    #[error("evaluation failed: {0}")]
    Eval(#[from] EvalError),
    #[error("manual thresholds are not allowed in an evaluation config")]
    ManualThreshold,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyOutput {
    pub results: BTreeMap<String, RetrievalResult>,
    pub standard: EvalReport,
    /// Narrow-scope-only analysis of the same retrieval results.
    pub narrow: Option<EvalReport>,
}

/// Runs every gold query (in parallel, aggregated in query-id order) and
/// evaluates the results over `grid`.
pub fn run_study(
    gold: &[GoldQuery],
    dictionary: &Dictionary,
    store: &EmbeddingStore,
    provider: &dyn EmbeddingProvider,
    config: &PipelineConfig,
    grid: &Grid,
    with_narrow: bool,
) -> Result<StudyOutput, StudyError> {
    if config.manual_threshold.is_some() {
        return Err(StudyError::ManualThreshold);
    }
    let inputs: Vec<QueryInput> = gold
        .iter()
        .map(|q| QueryInput::new(q.input_terms.clone()).with_config(config.clone()))
        .collect();
    let mut results = BTreeMap::new();
    for (q, r) in gold
        .iter()
        .zip(run_batch(&inputs, dictionary, store, provider))
    {
        let r = r.map_err(|source| StudyError::Query {
            query_id: q.query_id.clone(),
            stage: source.stage(),
            source,
        })?;
        results.insert(q.query_id.clone(), r);
    }
    let known = |c| dictionary.contains(c);
    let standard = evaluate(&results, gold, grid, known)?;
    let narrow = if with_narrow {
        let subset = narrow_only(gold);
        let mut report = evaluate(&results, &subset.queries, grid, known)?;
        report.dropped_queries = subset.dropped;
        Some(report)
    } else {
        None
    };
    Ok(StudyOutput {
        results,
        standard,
        narrow,
    })
}

/// Human-readable summary: one line per cut-off with mean (SD) precision,
/// recall and F1, then the automated-versus-max-F1 comparison.
pub fn summary_table(report: &EvalReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>7}  {:>15}  {:>15}  {:>15}",
        "cutoff", "precision", "recall", "f1"
    );
    for s in &report.summary {
        let _ = writeln!(
            out,
            "{:>7}  {:>6.3} ({:>6.3})  {:>6.3} ({:>6.3})  {:>6.3} ({:>6.3})",
            format_cutoff(s.cutoff),
            s.precision.mean,
            s.precision.sd,
            s.recall.mean,
            s.recall.sd,
            s.f1.mean,
            s.f1.sd,
        );
    }
    let _ = writeln!(out);
    let _ = writeln!(out, "{:>9}  {:>15}  {:>15}", "metric", "auto", "max-f1");
    let (a, m) = (&report.auto.column, &report.max_f1.column);
    for (name, x, y) in [
        ("precision", a.precision, m.precision),
        ("recall", a.recall, m.recall),
        ("f1", a.f1, m.f1),
        ("threshold", a.threshold, m.threshold),
    ] {
        let _ = writeln!(
            out,
            "{name:>9}  {:>6.3} ({:>6.3})  {:>6.3} ({:>6.3})",
            x.mean, x.sd, y.mean, y.sd
        );
    }
    match report.size_correlation {
        Some(r) => {
            let _ = writeln!(out, "\nmax-F1 vs gold size: r = {r:.3}");
        }
        None => {
            let _ = writeln!(out, "\nmax-F1 vs gold size: r undefined");
        }
    }
    if !report.dropped_queries.is_empty() {
        let _ = writeln!(
            out,
            "queries without narrow gold: {}",
            report.dropped_queries.join(", ")
        );
    }
    out
}
