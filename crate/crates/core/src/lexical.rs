//! Fuzzy string matching of query text against dictionary names.
//!
//! The score is the normalized Levenshtein ratio
//! `1 - dist(a, b) / max(len(a), len(b))` over normalized names, counted in
//! characters.

use serde::Serialize;

use crate::corpus::{normalize_name, Dictionary, TermCode};

pub const DEFAULT_LEXICAL_CUTOFF: f64 = 0.90;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("text {0:?} is empty after normalization")]
pub struct EmptyText(pub String);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LexicalMatch {
    pub code: TermCode,
    pub score: f64,
    pub normalized_query: String,
    pub normalized_name: String,
}

fn ratio_normalized(a: &str, b: &str) -> f64 {
    if a == b {
        return 1.0;
    }
    let longest = a.chars().count().max(b.chars().count());
    1.0 - strsim::levenshtein(a, b) as f64 / longest as f64
}

pub fn lexical_ratio(a: &str, b: &str) -> Result<f64, EmptyText> {
    let na = normalize_name(a);
    if na.is_empty() {
        return Err(EmptyText(a.to_string()));
    }
    let nb = normalize_name(b);
    if nb.is_empty() {
        return Err(EmptyText(b.to_string()));
    }
    Ok(ratio_normalized(&na, &nb))
}

/// All dictionary terms ranked by lexical ratio against `query`, best first,
/// ties by ascending code.
pub fn rank_lexical(query: &str, dictionary: &Dictionary) -> Result<Vec<LexicalMatch>, EmptyText> {
    let nq = normalize_name(query);
    if nq.is_empty() {
        return Err(EmptyText(query.to_string()));
    }
    let mut all: Vec<LexicalMatch> = dictionary
        .iter_normalized()
        .map(|(term, name)| LexicalMatch {
            code: term.code,
            score: ratio_normalized(&nq, name),
            normalized_query: nq.clone(),
            normalized_name: name.to_string(),
        })
        .collect();
    all.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.code.cmp(&b.code)));
    Ok(all)
}

/// Highest-scoring dictionary term for `query`; `None` on an empty dictionary.
pub fn best_lexical(
    query: &str,
    dictionary: &Dictionary,
) -> Result<Option<LexicalMatch>, EmptyText> {
    let nq = normalize_name(query);
    if nq.is_empty() {
        return Err(EmptyText(query.to_string()));
    }
    // iteration is in ascending code order, so strict > keeps the lowest code on ties
    let mut best: Option<(TermCode, f64, &str)> = None;
    for (term, name) in dictionary.iter_normalized() {
        let score = ratio_normalized(&nq, name);
        if best.is_none_or(|(_, s, _)| score > s) {
            best = Some((term.code, score, name));
        }
    }
    Ok(best.map(|(code, score, name)| LexicalMatch {
        code,
        score,
        normalized_query: nq.clone(),
        normalized_name: name.to_string(),
    }))
}
