//! Retrieval evaluation against gold query sets.
//!
//! Per query and cut-off: true positives are retained codes that are also
//! gold codes, precision is `tp / retrieved`, recall is `tp / gold` and F1
//! their harmonic mean, each taken as 0 when its denominator is 0. Summaries
//! average per-query values, so mean F1 is not the harmonic mean of mean
//! precision and mean recall.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::corpus::{GoldQuery, Scope, TermCode};
use crate::pipeline::RetrievalResult;
use crate::threshold::{pearson, ThresholdError, ThresholdSource};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("no retrieval result for gold query {0:?}")]
    MissingResult(String),
    #[error("query {0:?} was thresholded manually; automated decision required")]
    NotAutomatic(String),
    #[error("no evaluation rows")]
    Empty,
    #[error("cut-off {0} does not cover the same queries as the first cut-off")]
    RaggedRows(f64),
    #[error("invalid grid: {0}")]
    Grid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Confusion {
    pub tp: usize,
    pub retrieved: usize,
    pub gold: usize,
}

pub fn confusion(retrieved: &BTreeSet<TermCode>, gold: &BTreeSet<TermCode>) -> Confusion {
    Confusion {
        tp: retrieved.intersection(gold).count(),
        retrieved: retrieved.len(),
        gold: gold.len(),
    }
}

impl Confusion {
    pub fn precision(&self) -> f64 {
        if self.retrieved == 0 {
            0.0
        } else {
            self.tp as f64 / self.retrieved as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.gold == 0 {
            0.0
        } else {
            self.tp as f64 / self.gold as f64
        }
    }

    pub fn f1(&self) -> f64 {
        f1(self.precision(), self.recall())
    }
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Ascending list of similarity cut-offs.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Grid(Vec<f64>);

impl Grid {
    pub fn new(mut values: Vec<f64>) -> Result<Self, EvalError> {
        if values.is_empty() {
            return Err(EvalError::Grid("empty grid".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EvalError::Grid("non-finite cut-off".into()));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(EvalError::Grid(
                "cut-offs must be strictly ascending".into(),
            ));
        }
        values.shrink_to_fit();
        Ok(Grid(values))
    }

    /// `start..=end` in `step` increments; `step` must divide the range.
    pub fn range(start: f64, end: f64, step: f64) -> Result<Self, EvalError> {
        if !(step > 0.0 && step.is_finite()) || !start.is_finite() || !end.is_finite() {
            return Err(EvalError::Grid(format!("bad range {start}:{end}:{step}")));
        }
        if end < start {
            return Err(EvalError::Grid(format!("end {end} below start {start}")));
        }
        let steps = (end - start) / step;
        let n = steps.round();
        if (steps - n).abs() > 1e-9 {
            return Err(EvalError::Grid(format!(
                "step {step} does not divide {start}..{end}"
            )));
        }
        let values = (0..=n as usize)
            .map(|i| round10(start + i as f64 * step))
            .collect();
        Grid::new(values)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn round10(x: f64) -> f64 {
    (x * 1e10).round() / 1e10
}

impl Default for Grid {
    /// 0.50, 0.55, ..., 0.90.
    fn default() -> Self {
        Grid::range(0.50, 0.90, 0.05).expect("static grid")
    }
}

impl FromStr for Grid {
    type Err = EvalError;

    /// Parses `start:end:step`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, c] = parts.as_slice() else {
            return Err(EvalError::Grid(format!(
                "expected start:end:step, got {s:?}"
            )));
        };
        let num = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| EvalError::Grid(format!("{x:?} is not a number")))
        };
        Grid::range(num(a)?, num(b)?, num(c)?)
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| format_cutoff(*v)).collect();
        f.write_str(&parts.join(","))
    }
}

/// Two decimals for cut-offs on a 0.01 lattice, six otherwise.
pub fn format_cutoff(v: f64) -> String {
    if ((v * 100.0).round() - v * 100.0).abs() < 1e-9 {
        format!("{v:.2}")
    } else {
        format!("{v:.6}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRow {
    pub query_id: String,
    pub cutoff: f64,
    pub tp: usize,
    pub retrieved: usize,
    pub gold: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl EvalRow {
    fn new(query_id: &str, cutoff: f64, c: Confusion) -> Self {
        EvalRow {
            query_id: query_id.to_string(),
            cutoff,
            tp: c.tp,
            retrieved: c.retrieved,
            gold: c.gold,
            precision: c.precision(),
            recall: c.recall(),
            f1: c.f1(),
        }
    }
}

fn sorted_gold(gold: &[GoldQuery]) -> Vec<&GoldQuery> {
    let mut v: Vec<&GoldQuery> = gold.iter().collect();
    v.sort_by(|a, b| a.query_id.cmp(&b.query_id));
    v
}

/// One row per (query, cut-off), queries in `query_id` order.
pub fn sweep(
    results: &BTreeMap<String, RetrievalResult>,
    gold: &[GoldQuery],
    grid: &Grid,
) -> Result<Vec<EvalRow>, EvalError> {
    let mut rows = Vec::with_capacity(gold.len() * grid.len());
    for q in sorted_gold(gold) {
        let result = results
            .get(&q.query_id)
            .ok_or_else(|| EvalError::MissingResult(q.query_id.clone()))?;
        let gold_codes = q.gold_codes();
        for &cutoff in grid.values() {
            let retained = result.retained_codes_at(cutoff);
            rows.push(EvalRow::new(
                &q.query_id,
                cutoff,
                confusion(&retained, &gold_codes),
            ));
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

impl Stats {
    /// Mean, sample standard deviation (n - 1), min and max. `None` when empty.
    pub fn of(values: &[f64]) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let sd = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        // keep min <= mean <= max under rounding
        Some(Stats {
            mean: mean.clamp(min, max),
            sd,
            min,
            max,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub cutoff: f64,
    pub queries: usize,
    pub precision: Stats,
    pub recall: Stats,
    pub f1: Stats,
}

/// Across-query statistics per cut-off, ordered by cut-off.
pub fn summarize(rows: &[EvalRow]) -> Result<Vec<SweepSummary>, EvalError> {
    if rows.is_empty() {
        return Err(EvalError::Empty);
    }
    let mut by_cutoff: BTreeMap<u64, Vec<&EvalRow>> = BTreeMap::new();
    for r in rows {
        by_cutoff.entry(ordered_key(r.cutoff)).or_default().push(r);
    }
    let mut reference: Option<BTreeSet<&str>> = None;
    let mut out = Vec::with_capacity(by_cutoff.len());
    for group in by_cutoff.values() {
        let ids: BTreeSet<&str> = group.iter().map(|r| r.query_id.as_str()).collect();
        match &reference {
            None => reference = Some(ids),
            Some(r) if *r != ids || ids.len() != group.len() => {
                return Err(EvalError::RaggedRows(group[0].cutoff))
            }
            Some(_) => {}
        }
        let col = |f: fn(&EvalRow) -> f64| {
            let v: Vec<f64> = group.iter().map(|r| f(r)).collect();
            Stats::of(&v).expect("group is non-empty")
        };
        out.push(SweepSummary {
            cutoff: group[0].cutoff,
            queries: group.len(),
            precision: col(|r| r.precision),
            recall: col(|r| r.recall),
            f1: col(|r| r.f1),
        });
    }
    Ok(out)
}

/// Order-preserving integer key for a finite f64.
fn ordered_key(x: f64) -> u64 {
    let bits = x.to_bits();
    if bits >> 63 == 1 {
        !bits
    } else {
        bits | (1 << 63)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
}

impl From<Stats> for MeanSd {
    fn from(s: Stats) -> Self {
        MeanSd {
            mean: s.mean,
            sd: s.sd,
        }
    }
}

/// Mean and SD over queries of one threshold-selection strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonColumn {
    pub precision: MeanSd,
    pub recall: MeanSd,
    pub f1: MeanSd,
    pub threshold: MeanSd,
}

/// Metrics of one query at the threshold a strategy chose for it.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QueryOutcome {
    pub query_id: String,
    pub threshold: f64,
    pub tp: usize,
    pub retrieved: usize,
    pub gold: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl QueryOutcome {
    fn from_row(r: &EvalRow) -> Self {
        QueryOutcome {
            query_id: r.query_id.clone(),
            threshold: r.cutoff,
            tp: r.tp,
            retrieved: r.retrieved,
            gold: r.gold,
            precision: r.precision,
            recall: r.recall,
            f1: r.f1,
        }
    }
}

fn column(outcomes: &[QueryOutcome]) -> Option<ComparisonColumn> {
    let stat = |f: fn(&QueryOutcome) -> f64| {
        let v: Vec<f64> = outcomes.iter().map(f).collect();
        Stats::of(&v).map(MeanSd::from)
    };
    Some(ComparisonColumn {
        precision: stat(|o| o.precision)?,
        recall: stat(|o| o.recall)?,
        f1: stat(|o| o.f1)?,
        threshold: stat(|o| o.threshold)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategyAnalysis {
    pub per_query: Vec<QueryOutcome>,
    pub column: ComparisonColumn,
}

/// Per query, the grid cut-off with maximum F1 (ties go to the lowest
/// cut-off), plus the across-query column.
pub fn max_f1_analysis(rows: &[EvalRow]) -> Result<StrategyAnalysis, EvalError> {
    let mut by_query: BTreeMap<&str, Vec<&EvalRow>> = BTreeMap::new();
    for r in rows {
        by_query.entry(r.query_id.as_str()).or_default().push(r);
    }
    let per_query: Vec<QueryOutcome> = by_query
        .into_values()
        .map(|mut qrows| {
            qrows.sort_by(|a, b| a.cutoff.total_cmp(&b.cutoff));
            let best = qrows
                .iter()
                .copied()
                .reduce(|best, r| if r.f1 > best.f1 { r } else { best })
                .expect("group is non-empty");
            QueryOutcome::from_row(best)
        })
        .collect();
    let column = column(&per_query).ok_or(EvalError::Empty)?;
    Ok(StrategyAnalysis { per_query, column })
}

/// Metrics at each query's automated threshold.
pub fn auto_threshold_analysis(
    results: &BTreeMap<String, RetrievalResult>,
    gold: &[GoldQuery],
) -> Result<StrategyAnalysis, EvalError> {
    let mut per_query = Vec::with_capacity(gold.len());
    for q in sorted_gold(gold) {
        let result = results
            .get(&q.query_id)
            .ok_or_else(|| EvalError::MissingResult(q.query_id.clone()))?;
        if result.decision.source == ThresholdSource::Manual {
            return Err(EvalError::NotAutomatic(q.query_id.clone()));
        }
        let c = confusion(&result.retained_codes(), &q.gold_codes());
        per_query.push(QueryOutcome::from_row(&EvalRow::new(
            &q.query_id,
            result.decision.threshold,
            c,
        )));
    }
    let column = column(&per_query).ok_or(EvalError::Empty)?;
    Ok(StrategyAnalysis { per_query, column })
}

#[derive(Debug, Clone, PartialEq)]
pub struct NarrowSubset {
    pub queries: Vec<GoldQuery>,
    /// Queries without any narrow gold term.
    pub dropped: Vec<String>,
}

/// Keeps only narrow-scope gold terms. Retrieval is not re-run.
pub fn narrow_only(gold: &[GoldQuery]) -> NarrowSubset {
    let mut queries = Vec::new();
    let mut dropped = Vec::new();
    for q in gold {
        let narrow: Vec<_> = q
            .gold_terms
            .iter()
            .filter(|g| g.scope == Scope::Narrow)
            .copied()
            .collect();
        if narrow.is_empty() {
            dropped.push(q.query_id.clone());
        } else {
            queries.push(GoldQuery {
                gold_terms: narrow,
                ..q.clone()
            });
        }
    }
    dropped.sort();
    NarrowSubset { queries, dropped }
}

/// Pearson correlation between per-query maximum F1 and gold list size.
pub fn size_correlation(max_f1: &[f64], gold_sizes: &[usize]) -> Result<f64, ThresholdError> {
    let sizes: Vec<f64> = gold_sizes.iter().map(|&s| s as f64).collect();
    pearson(max_f1, &sizes)
}

/// Every analysis for one gold set over one set of retrieval results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub grid: Grid,
    pub rows: Vec<EvalRow>,
    pub summary: Vec<SweepSummary>,
    pub max_f1: StrategyAnalysis,
    pub auto: StrategyAnalysis,
    /// `None` when the correlation is undefined (e.g. constant F1).
    pub size_correlation: Option<f64>,
    pub gold_sizes: BTreeMap<String, usize>,
    pub unreachable: BTreeMap<String, Vec<TermCode>>,
    pub dropped_queries: Vec<String>,
}

pub fn evaluate(
    results: &BTreeMap<String, RetrievalResult>,
    gold: &[GoldQuery],
    grid: &Grid,
    known_code: impl Fn(TermCode) -> bool,
) -> Result<EvalReport, EvalError> {
    if gold.is_empty() {
        return Err(EvalError::Empty);
    }
    let rows = sweep(results, gold, grid)?;
    let summary = summarize(&rows)?;
    let max_f1 = max_f1_analysis(&rows)?;
    let auto = auto_threshold_analysis(results, gold)?;
    let gold_sizes: BTreeMap<String, usize> = gold
        .iter()
        .map(|q| (q.query_id.clone(), q.gold_terms.len()))
        .collect();
    let f1s: Vec<f64> = max_f1.per_query.iter().map(|o| o.f1).collect();
    let sizes: Vec<usize> = max_f1
        .per_query
        .iter()
        .map(|o| gold_sizes[&o.query_id])
        .collect();
    let unreachable = gold
        .iter()
        .map(|q| {
            let codes = q
                .gold_terms
                .iter()
                .map(|g| g.code)
                .filter(|&c| !known_code(c))
                .collect();
            (q.query_id.clone(), codes)
        })
        .collect();
    Ok(EvalReport {
        grid: grid.clone(),
        size_correlation: size_correlation(&f1s, &sizes).ok(),
        rows,
        summary,
        max_f1,
        auto,
        gold_sizes,
        unreachable,
        dropped_queries: Vec::new(),
    })
}
