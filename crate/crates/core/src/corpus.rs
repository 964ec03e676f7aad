//! Term dictionary and gold query sets.
//!
//! The dictionary is a tab-separated file with a `code<TAB>name<TAB>group`
//! header. Gold query sets are JSON arrays of reference queries whose gold
//! terms carry a narrow/broad scope flag.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::lexical::{best_lexical, LexicalMatch};

pub const DICTIONARY_HEADER: &str = "code\tname\tgroup";

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate code {code} on lines {first_line} and {line}")]
    DuplicateCode {
        code: TermCode,
        first_line: usize,
        line: usize,
    },
    #[error("duplicate normalized name {name:?} on lines {first_line} and {line}")]
    DuplicateName {
        name: String,
        first_line: usize,
        line: usize,
    },
    #[error("gold set: {0}")]
    GoldJson(#[from] serde_json::Error),
    #[error("gold query {query_id:?}: {message}")]
    InvalidGold { query_id: String, message: String },
}

/// Dictionary-unique integer identifier of a preferred term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TermCode(pub u64);

impl fmt::Display for TermCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Canonical form used for duplicate detection and lexical matching:
/// lowercase, characters other than letters, digits, whitespace and `-`
/// dropped, whitespace runs collapsed to one space, ends trimmed.
pub fn normalize_name(raw: &str) -> String {
    let kept: String = raw
        .chars()
        .flat_map(char::to_lowercase)
        .filter_map(|c| {
            if c.is_alphanumeric() || c == '-' {
                Some(c)
            } else if c.is_whitespace() {
                Some(' ')
            } else {
                None
            }
        })
        .collect();
    kept.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferredTerm {
    pub code: TermCode,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group: Option<String>,
}

/// Immutable set of preferred terms, sorted by code.
#[derive(Debug, Clone, PartialEq)]
pub struct Dictionary {
    terms: Vec<PreferredTerm>,
    normalized: Vec<String>,
    index: HashMap<TermCode, usize>,
    version_tag: String,
}

impl Dictionary {
    /// Rows carry the source line number used in error messages.
    fn build(rows: Vec<(usize, PreferredTerm)>, version_tag: String) -> Result<Self, CorpusError> {
        let mut seen_codes: HashMap<TermCode, usize> = HashMap::new();
        let mut seen_names: HashMap<String, usize> = HashMap::new();
        let mut keyed = Vec::with_capacity(rows.len());
        for (line, term) in rows {
            let norm = normalize_name(&term.name);
            if norm.is_empty() {
                return Err(CorpusError::Malformed {
                    line,
                    message: "term name is empty after normalization".into(),
                });
            }
            if let Some(&first_line) = seen_codes.get(&term.code) {
                return Err(CorpusError::DuplicateCode {
                    code: term.code,
                    first_line,
                    line,
                });
            }
            if let Some(&first_line) = seen_names.get(&norm) {
                return Err(CorpusError::DuplicateName {
                    name: norm,
                    first_line,
                    line,
                });
            }
            seen_codes.insert(term.code, line);
            seen_names.insert(norm.clone(), line);
            keyed.push((term, norm));
        }
        keyed.sort_by_key(|(t, _)| t.code);
        let (terms, normalized): (Vec<_>, Vec<_>) = keyed.into_iter().unzip();
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t): (usize, &PreferredTerm)| (t.code, i))
            .collect();
        Ok(Dictionary {
            terms,
            normalized,
            index,
            version_tag,
        })
    }

    pub fn from_terms(
        terms: impl IntoIterator<Item = PreferredTerm>,
        version_tag: impl Into<String>,
    ) -> Result<Self, CorpusError> {
        let rows = terms
            .into_iter()
            .enumerate()
            .map(|(i, t)| (i + 1, t))
            .collect();
        Self::build(rows, version_tag.into())
    }

    /// Parses dictionary TSV text. Line numbers count the header as line 1.
    pub fn parse_tsv(text: &str, version_tag: impl Into<String>) -> Result<Self, CorpusError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim_end_matches('\r') == DICTIONARY_HEADER => {}
            Some(_) => {
                return Err(CorpusError::Malformed {
                    line: 1,
                    message: format!("expected header {DICTIONARY_HEADER:?}"),
                })
            }
            None => {
                return Err(CorpusError::Malformed {
                    line: 1,
                    message: "missing header".into(),
                })
            }
        }
        let mut rows = Vec::new();
        for (idx, raw) in lines {
            let line = idx + 1;
            let raw = raw.trim_end_matches('\r');
            if raw.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = raw.split('\t').collect();
            if cols.len() != 3 {
                return Err(CorpusError::Malformed {
                    line,
                    message: format!("expected 3 tab-separated columns, found {}", cols.len()),
                });
            }
            let code = cols[0]
                .trim()
                .parse::<u64>()
                .map_err(|_| CorpusError::Malformed {
                    line,
                    message: format!("code {:?} is not a non-negative integer", cols[0]),
                })?;
            let group = cols[2].trim();
            rows.push((
                line,
                PreferredTerm {
                    code: TermCode(code),
                    name: cols[1].trim().to_string(),
                    group: (!group.is_empty()).then(|| group.to_string()),
                },
            ));
        }
        Self::build(rows, version_tag.into())
    }

    /// Loads a dictionary TSV file; the file stem becomes the version tag.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let tag = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::parse_tsv(&text, tag)
    }

    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{DICTIONARY_HEADER}")?;
        for t in &self.terms {
            writeln!(
                out,
                "{}\t{}\t{}",
                t.code,
                t.name,
                t.group.as_deref().unwrap_or("")
            )?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> io::Result<()> {
        let mut buf = Vec::new();
        self.write_tsv(&mut buf)?;
        fs::write(path, buf)
    }

    pub fn terms(&self) -> &[PreferredTerm] {
        &self.terms
    }

    /// Terms paired with their normalized names, in code order.
    pub fn iter_normalized(&self) -> impl Iterator<Item = (&PreferredTerm, &str)> {
        self.terms
            .iter()
            .zip(self.normalized.iter().map(String::as_str))
    }

    pub fn get(&self, code: TermCode) -> Option<&PreferredTerm> {
        self.index.get(&code).map(|&i| &self.terms[i])
    }

    pub fn contains(&self, code: TermCode) -> bool {
        self.index.contains_key(&code)
    }

    pub fn codes(&self) -> impl Iterator<Item = TermCode> + '_ {
        self.terms.iter().map(|t| t.code)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn version_tag(&self) -> &str {
        &self.version_tag
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Narrow,
    Broad,
}

impl std::str::FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "narrow" => Ok(Scope::Narrow),
            "broad" => Ok(Scope::Broad),
            _ => Err(format!("invalid scope {s:?} (expected narrow or broad)")),
        }
    }
}

impl<'de> Deserialize<'de> for Scope {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldTerm {
    pub code: TermCode,
    pub scope: Scope,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GoldQuery {
    pub query_id: String,
    pub name: String,
    pub input_terms: Vec<String>,
    pub gold_terms: Vec<GoldTerm>,
}

impl GoldQuery {
    pub fn gold_codes(&self) -> BTreeSet<TermCode> {
        self.gold_terms.iter().map(|g| g.code).collect()
    }

    fn check(&self) -> Result<(), CorpusError> {
        let fail = |message: String| CorpusError::InvalidGold {
            query_id: self.query_id.clone(),
            message,
        };
        if self.input_terms.is_empty() {
            return Err(fail("input_terms is empty".into()));
        }
        if let Some(t) = self
            .input_terms
            .iter()
            .find(|t| normalize_name(t).is_empty())
        {
            return Err(fail(format!(
                "input term {t:?} is empty after normalization"
            )));
        }
        let mut seen = BTreeSet::new();
        for g in &self.gold_terms {
            if !seen.insert(g.code) {
                return Err(fail(format!("gold code {} listed twice", g.code)));
            }
        }
        Ok(())
    }
}

/// A gold code that does not exist in the loaded dictionary. It stays in
/// the recall denominator but can never be retrieved.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct UnreachableGold {
    pub query_id: String,
    pub code: TermCode,
}

impl fmt::Display for UnreachableGold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "query {}: unreachable gold term {} (not in dictionary)",
            self.query_id, self.code
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GoldSet {
    pub queries: Vec<GoldQuery>,
    pub warnings: Vec<UnreachableGold>,
}

impl GoldSet {
    pub fn parse_json(text: &str, dictionary: &Dictionary) -> Result<Self, CorpusError> {
        let queries: Vec<GoldQuery> = serde_json::from_str(text)?;
        let mut ids = BTreeSet::new();
        for q in &queries {
            q.check()?;
            if !ids.insert(q.query_id.as_str()) {
                return Err(CorpusError::InvalidGold {
                    query_id: q.query_id.clone(),
                    message: "duplicate query_id".into(),
                });
            }
        }
        let warnings = queries
            .iter()
            .flat_map(|q| {
                q.gold_terms
                    .iter()
                    .filter(|g| !dictionary.contains(g.code))
                    .map(|g| UnreachableGold {
                        query_id: q.query_id.clone(),
                        code: g.code,
                    })
            })
            .collect();
        Ok(GoldSet { queries, warnings })
    }

    pub fn load(path: impl AsRef<Path>, dictionary: &Dictionary) -> Result<Self, CorpusError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse_json(&text, dictionary)
    }

    /// Unreachable gold codes grouped by query id.
    pub fn unreachable_by_query(&self) -> BTreeMap<&str, Vec<TermCode>> {
        let mut out: BTreeMap<&str, Vec<TermCode>> = BTreeMap::new();
        for w in &self.warnings {
            out.entry(w.query_id.as_str()).or_default().push(w.code);
        }
        out
    }
}

pub fn load_dictionary(path: impl AsRef<Path>) -> Result<Dictionary, CorpusError> {
    Dictionary::load(path)
}

pub fn load_gold_set(
    path: impl AsRef<Path>,
    dictionary: &Dictionary,
) -> Result<GoldSet, CorpusError> {
    GoldSet::load(path, dictionary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputCheck {
    pub input_term: String,
    pub is_valid_pt: bool,
    pub best: Option<LexicalMatch>,
}

/// Flags input terms whose best lexical match falls below `lexical_cutoff`,
/// i.e. inputs that are not (close spellings of) dictionary terms.
pub fn validate_inputs(
    query: &GoldQuery,
    dictionary: &Dictionary,
    lexical_cutoff: f64,
) -> Vec<InputCheck> {
    query
        .input_terms
        .iter()
        .map(|term| {
            let best = best_lexical(term, dictionary).ok().flatten();
            InputCheck {
                input_term: term.clone(),
                is_valid_pt: best.as_ref().is_some_and(|m| m.score >= lexical_cutoff),
                best,
            }
        })
        .collect()
}
