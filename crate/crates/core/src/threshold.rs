//! Automated similarity threshold selection.
//!
//! The score distribution is split into a relevant upper group and the rest
//! by exact one-dimensional two-means, and the descending score curve is
//! searched for a knee with the Kneedle procedure. The knee, when one is
//! found, is the threshold; otherwise the two-means boundary is used.

use serde::{Deserialize, Serialize};

pub const DEFAULT_KNEE_SENSITIVITY: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ThresholdError {
    #[error("no scores")]
    Empty,
    #[error("non-finite score at index {0}")]
    NonFinite(usize),
    #[error("knee detection needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("scores are not sorted in descending order at index {0}")]
    NotDescending(usize),
    #[error("sensitivity must be positive and finite, got {0}")]
    BadSensitivity(f64),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("zero variance")]
    ZeroVariance,
}

/// Optimal two-cluster split of a 1-D score set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition2M {
    /// Scores at or above the boundary form the relevant cluster.
    pub boundary: f64,
    pub relevant_centroid: f64,
    pub other_centroid: f64,
    pub relevant_count: usize,
    pub sse: f64,
}

impl Partition2M {
    pub fn is_relevant(&self, score: f64) -> bool {
        score >= self.boundary
    }
}

/// Exact two-means in one dimension.
///
/// The optimum is a contiguous split of the sorted scores, so every split
/// between distinct values is evaluated with prefix sums. Splits that
/// separate equal values are never optimal and are skipped. Equal SSE
/// prefers the larger relevant cluster. A constant input yields a single
/// relevant cluster whose boundary is that constant.
pub fn two_means(scores: &[f64]) -> Result<Partition2M, ThresholdError> {
    if scores.is_empty() {
        return Err(ThresholdError::Empty);
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(ThresholdError::NonFinite(i));
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();

    // centering keeps the prefix-sum SSE free of large cancellations
    let shift = sorted.iter().sum::<f64>() / n as f64;
    let mut sum = vec![0.0; n + 1];
    let mut sq = vec![0.0; n + 1];
    for (i, &x) in sorted.iter().enumerate() {
        let c = x - shift;
        sum[i + 1] = sum[i] + c;
        sq[i + 1] = sq[i] + c * c;
    }
    let cluster_sse = |lo: usize, hi: usize| {
        let m = (hi - lo) as f64;
        let s = sum[hi] - sum[lo];
        (sq[hi] - sq[lo] - s * s / m).max(0.0)
    };

    let mut best: Option<(usize, f64)> = None;
    for k in 1..n {
        if sorted[k - 1] == sorted[k] {
            continue;
        }
        let sse = cluster_sse(0, k) + cluster_sse(k, n);
        let tol = 1e-12 * (1.0 + sse.abs());
        // k ascends, so keeping the first of equal-SSE splits keeps the largest relevant cluster
        if best.is_none_or(|(_, b)| sse < b - tol) {
            best = Some((k, sse));
        }
    }

    let Some((k, sse)) = best else {
        let v = sorted[0];
        return Ok(Partition2M {
            boundary: v,
            relevant_centroid: v,
            other_centroid: v,
            relevant_count: n,
            sse: 0.0,
        });
    };
    let other_centroid = sorted[..k].iter().sum::<f64>() / k as f64;
    let relevant_centroid = sorted[k..].iter().sum::<f64>() / (n - k) as f64;
    let mut boundary = 0.5 * (other_centroid + relevant_centroid);
    // at the optimum every point is strictly nearer its own centroid; guard rounding
    if !(boundary > sorted[k - 1] && boundary <= sorted[k]) {
        boundary = sorted[k];
    }
    Ok(Partition2M {
        boundary,
        relevant_centroid,
        other_centroid,
        relevant_count: n - k,
        sse,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KneeResult {
    /// Index into the descending-sorted scores.
    pub knee_rank: Option<usize>,
    pub knee_score: Option<f64>,
    pub sensitivity: f64,
}

impl KneeResult {
    fn none(sensitivity: f64) -> Self {
        KneeResult {
            knee_rank: None,
            knee_score: None,
            sensitivity,
        }
    }
}

/// Kneedle on a descending score curve.
///
/// `x` is the rank scaled to [0, 1] and `y` the min-max scaled score. The
/// difference curve is `d = y - (1 - x)`: the distance of the curve above
/// the chord joining its end points. Each strict local maximum of `d` is a
/// candidate; it is confirmed when `d` falls below
/// `d_max - sensitivity * mean(dx)` before the next candidate. The first
/// confirmed candidate is returned. No smoothing is applied.
pub fn kneedle(sorted_desc: &[f64], sensitivity: f64) -> Result<KneeResult, ThresholdError> {
    if !(sensitivity.is_finite() && sensitivity > 0.0) {
        return Err(ThresholdError::BadSensitivity(sensitivity));
    }
    let n = sorted_desc.len();
    if n < 3 {
        return Err(ThresholdError::TooFewPoints(n));
    }
    if let Some(i) = sorted_desc.iter().position(|s| !s.is_finite()) {
        return Err(ThresholdError::NonFinite(i));
    }
    if let Some(i) = (1..n).find(|&i| sorted_desc[i] > sorted_desc[i - 1]) {
        return Err(ThresholdError::NotDescending(i));
    }
    let max = sorted_desc[0];
    let min = sorted_desc[n - 1];
    if max == min {
        return Ok(KneeResult::none(sensitivity));
    }
    let span = (n - 1) as f64;
    let diff: Vec<f64> = sorted_desc
        .iter()
        .enumerate()
        .map(|(i, &s)| (s - min) / (max - min) - (1.0 - i as f64 / span))
        .collect();

    let candidates: Vec<usize> = (1..n - 1)
        .filter(|&i| diff[i] > diff[i - 1] && diff[i] > diff[i + 1])
        .collect();
    // x is evenly spaced, so mean(dx) = 1 / (n - 1)
    let drop = sensitivity / span;
    for (c, &i) in candidates.iter().enumerate() {
        let end = candidates.get(c + 1).copied().unwrap_or(n);
        let limit = diff[i] - drop;
        if diff[i + 1..end].iter().any(|&d| d < limit) {
            return Ok(KneeResult {
                knee_rank: Some(i),
                knee_score: Some(sorted_desc[i]),
                sensitivity,
            });
        }
    }
    Ok(KneeResult::none(sensitivity))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdSource {
    Knee,
    TwoMeansBoundary,
    Manual,
}

/// Which part of the score curve the knee search runs on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KneeScope {
    #[default]
    Full,
    RelevantCluster,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdDecision {
    pub threshold: f64,
    pub source: ThresholdSource,
    pub partition: Partition2M,
    pub knee: KneeResult,
}

impl ThresholdDecision {
    pub fn is_automatic(&self) -> bool {
        self.source != ThresholdSource::Manual
    }
}

/// Knee score if a knee exists, else the two-means boundary. Both
/// diagnostics are always filled in.
pub fn auto_threshold(
    scores: &[f64],
    sensitivity: f64,
    scope: KneeScope,
) -> Result<ThresholdDecision, ThresholdError> {
    if !(sensitivity.is_finite() && sensitivity > 0.0) {
        return Err(ThresholdError::BadSensitivity(sensitivity));
    }
    let partition = two_means(scores)?;
    let mut desc = scores.to_vec();
    desc.sort_by(|a, b| b.total_cmp(a));
    if scope == KneeScope::RelevantCluster {
        desc.truncate(partition.relevant_count);
    }
    let knee = if desc.len() >= 3 {
        kneedle(&desc, sensitivity)?
    } else {
        KneeResult::none(sensitivity)
    };
    let (threshold, source) = match knee.knee_score {
        Some(s) => (s, ThresholdSource::Knee),
        None => (partition.boundary, ThresholdSource::TwoMeansBoundary),
    };
    Ok(ThresholdDecision {
        threshold,
        source,
        partition,
        knee,
    })
}

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, ThresholdError> {
    if x.len() != y.len() {
        return Err(ThresholdError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(ThresholdError::TooFewPoints(x.len()));
    }
    let constant = |v: &[f64]| v.iter().all(|a| *a == v[0]);
    if constant(x) || constant(y) {
        return Err(ThresholdError::ZeroVariance);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(ThresholdError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}
