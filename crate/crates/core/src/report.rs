//! Export formats for retrieval results and evaluation reports.
//!
//! Every writer here is deterministic: identical inputs give identical bytes.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::TermCode;
use crate::evaluation::{format_cutoff, ComparisonColumn, EvalReport, MeanSd, Stats};
use crate::pipeline::{RetrievalResult, ScoredTerm, SeedMatch};
use crate::threshold::ThresholdSource;

pub const EXPORT_CSV_HEADER: [&str; 5] = ["rank", "code", "name", "score", "retained"];

pub const SWEEP_CSV_HEADER: [&str; 13] = [
    "cutoff",
    "precision_mean",
    "precision_sd",
    "precision_min",
    "precision_max",
    "recall_mean",
    "recall_sd",
    "recall_min",
    "recall_max",
    "f1_mean",
    "f1_sd",
    "f1_min",
    "f1_max",
];

pub const COMPARISON_CSV_HEADER: [&str; 5] =
    ["metric", "auto_mean", "auto_sd", "maxf1_mean", "maxf1_sd"];

pub const PER_QUERY_CSV_HEADER: [&str; 14] = [
    "query_id",
    "gold_size",
    "unreachable_gold",
    "maxf1_cutoff",
    "maxf1_precision",
    "maxf1_recall",
    "maxf1_f1",
    "auto_threshold",
    "auto_precision",
    "auto_recall",
    "auto_f1",
    "auto_tp",
    "auto_retrieved",
    "unreachable_codes",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportDecision {
    pub threshold: f64,
    pub source: ThresholdSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportTerm {
    pub code: TermCode,
    pub name: String,
    /// Relevance clamped to [0, 1].
    pub score: f64,
    pub rank: usize,
    pub retained: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExportDocument {
    pub query: Vec<String>,
    pub matched_seeds: Vec<SeedMatch>,
    pub decision: ExportDecision,
    pub terms: Vec<ExportTerm>,
}

impl ExportDocument {
    /// Export of `terms` (already in rank order); ranks are renumbered from 1
    /// within the exported list.
    pub fn new<'a>(
        result: &RetrievalResult,
        threshold: f64,
        source: ThresholdSource,
        terms: impl IntoIterator<Item = &'a ScoredTerm>,
    ) -> Self {
        ExportDocument {
            query: result.query.clone(),
            matched_seeds: result.matched_seeds.clone(),
            decision: ExportDecision { threshold, source },
            terms: terms
                .into_iter()
                .enumerate()
                .map(|(i, t)| ExportTerm {
                    code: t.code,
                    name: t.name.clone(),
                    score: t.sim_best_pt.clamp(0.0, 1.0),
                    rank: i + 1,
                    retained: t.retained,
                })
                .collect(),
        }
    }

    /// The retained list of a result.
    pub fn retained(result: &RetrievalResult) -> Self {
        Self::new(
            result,
            result.decision.threshold,
            result.decision.source,
            result.retained(),
        )
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("export serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(EXPORT_CSV_HEADER).expect("in-memory write");
        for t in &self.terms {
            w.write_record([
                t.rank.to_string(),
                t.code.to_string(),
                t.name.clone(),
                format!("{:.6}", t.score),
                t.retained.to_string(),
            ])
            .expect("in-memory write");
        }
        into_string(w)
    }
}

fn into_string(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

fn num(x: f64) -> String {
    format!("{x:.6}")
}

fn stat_cells(s: &Stats) -> [String; 4] {
    [num(s.mean), num(s.sd), num(s.min), num(s.max)]
}

/// Across-query precision/recall/F1 statistics per cut-off.
pub fn sweep_csv(report: &EvalReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SWEEP_CSV_HEADER).expect("in-memory write");
    for s in &report.summary {
        let mut rec = vec![format_cutoff(s.cutoff)];
        rec.extend(stat_cells(&s.precision));
        rec.extend(stat_cells(&s.recall));
        rec.extend(stat_cells(&s.f1));
        w.write_record(&rec).expect("in-memory write");
    }
    into_string(w)
}

/// Automated threshold versus per-query maximum-F1 threshold.
pub fn comparison_csv(auto: &ComparisonColumn, max_f1: &ComparisonColumn) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(COMPARISON_CSV_HEADER)
        .expect("in-memory write");
    let rows: [(&str, MeanSd, MeanSd); 4] = [
        ("precision", auto.precision, max_f1.precision),
        ("recall", auto.recall, max_f1.recall),
        ("f1", auto.f1, max_f1.f1),
        ("threshold", auto.threshold, max_f1.threshold),
    ];
    for (name, a, m) in rows {
        w.write_record([
            name.to_string(),
            num(a.mean),
            num(a.sd),
            num(m.mean),
            num(m.sd),
        ])
        .expect("in-memory write");
    }
    into_string(w)
}

pub fn per_query_csv(report: &EvalReport) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(PER_QUERY_CSV_HEADER)
        .expect("in-memory write");
    for (best, auto) in report.max_f1.per_query.iter().zip(&report.auto.per_query) {
        debug_assert_eq!(best.query_id, auto.query_id);
        let unreachable = report
            .unreachable
            .get(&best.query_id)
            .map(Vec::as_slice)
            .unwrap_or_default();
        let codes: Vec<String> = unreachable.iter().map(|c| c.to_string()).collect();
        w.write_record([
            best.query_id.clone(),
            report.gold_sizes[&best.query_id].to_string(),
            unreachable.len().to_string(),
            format_cutoff(best.threshold),
            num(best.precision),
            num(best.recall),
            num(best.f1),
            num(auto.threshold),
            num(auto.precision),
            num(auto.recall),
            num(auto.f1),
            auto.tp.to_string(),
            auto.retrieved.to_string(),
            codes.join(";"),
        ])
        .expect("in-memory write");
    }
    into_string(w)
}

#[derive(Serialize)]
struct Series {
    mean: Vec<f64>,
    sd: Vec<f64>,
}

#[derive(Serialize)]
struct PlotSeries {
    precision: Series,
    recall: Series,
    f1: Series,
}

#[derive(Serialize)]
struct SizeCorrelation {
    r: Option<f64>,
    query_ids: Vec<String>,
    gold_size: Vec<usize>,
    max_f1: Vec<f64>,
}

#[derive(Serialize)]
struct PlotData {
    grid: Vec<f64>,
    series: PlotSeries,
    size_correlation: SizeCorrelation,
}

/// Mean and SD series per metric versus cut-off, plus the max-F1 versus
/// gold-size scatter and its Pearson r.
pub fn plot_json(report: &EvalReport) -> String {
    let series = |f: fn(&crate::evaluation::SweepSummary) -> Stats| Series {
        mean: report.summary.iter().map(|s| f(s).mean).collect(),
        sd: report.summary.iter().map(|s| f(s).sd).collect(),
    };
    let data = PlotData {
        grid: report.summary.iter().map(|s| s.cutoff).collect(),
        series: PlotSeries {
            precision: series(|s| s.precision),
            recall: series(|s| s.recall),
            f1: series(|s| s.f1),
        },
        size_correlation: SizeCorrelation {
            r: report.size_correlation,
            query_ids: report
                .max_f1
                .per_query
                .iter()
                .map(|o| o.query_id.clone())
                .collect(),
            gold_size: report
                .max_f1
                .per_query
                .iter()
                .map(|o| report.gold_sizes[&o.query_id])
                .collect(),
            max_f1: report.max_f1.per_query.iter().map(|o| o.f1).collect(),
        },
    };
    let mut s = serde_json::to_string_pretty(&data).expect("plot data serializes");
    s.push('\n');
    s
}

pub const SWEEP_FILE: &str = "sweep.csv";
pub const COMPARISON_FILE: &str = "comparison.csv";
pub const PER_QUERY_FILE: &str = "per_query.csv";
pub const PLOT_FILE: &str = "plot_data.json";
pub const NARROW_PREFIX: &str = "narrow_";

fn report_files(report: &EvalReport, prefix: &str) -> Vec<(String, String)> {
    vec![
        (format!("{prefix}{SWEEP_FILE}"), sweep_csv(report)),
        (
            format!("{prefix}{COMPARISON_FILE}"),
            comparison_csv(&report.auto.column, &report.max_f1.column),
        ),
        (format!("{prefix}{PER_QUERY_FILE}"), per_query_csv(report)),
        (format!("{prefix}{PLOT_FILE}"), plot_json(report)),
    ]
}

/// Writes the four report files for `standard` and, when given, the four
/// `narrow_`-prefixed files for the narrow-only analysis. Files already
/// written are removed if a later write fails.
pub fn emit_reports(
    out_dir: &Path,
    standard: &EvalReport,
    narrow: Option<&EvalReport>,
) -> io::Result<Vec<PathBuf>> {
    let mut files = report_files(standard, "");
    if let Some(n) = narrow {
        files.extend(report_files(n, NARROW_PREFIX));
    }
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::with_capacity(files.len());
    for (name, body) in files {
        let path = out_dir.join(&name);
        let tmp = out_dir.join(format!(".{name}.tmp"));
        let res = fs::write(&tmp, body).and_then(|_| fs::rename(&tmp, &path));
        if let Err(e) = res {
            let _ = fs::remove_file(&tmp);
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(e);
        }
        written.push(path);
    }
    Ok(written)
}
