//! Synthetic planted-cluster corpora for tests, demos and benchmarks.
//!
//! Each query owns one coordinate axis. Its narrow members sit at a chosen
//! cosine to that axis, its broad members further out, and the remaining
//! mass of every member lies in a shared "noise" subspace orthogonal to all
//! query axes. Filler terms live only in the noise subspace. The free-text
//! input of a query maps, through a [`ProbeTable`], to its axis.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Dictionary, GoldQuery, GoldTerm, PreferredTerm, Scope, TermCode};
use crate::embedding::{gaussian_vector, EmbeddingStore, EmbeddingVector};
use crate::pipeline::ProbeTable;

pub const MEMBER_CODE_BASE: u64 = 10_000_000;
pub const FILLER_CODE_BASE: u64 = 20_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputStyle {
    /// Input is free text resolved through the probe table.
    FreeText,
    /// Input is the exact name of the query's first narrow member.
    ExactName,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedSpec {
    pub queries: usize,
    pub narrow_per_query: usize,
    pub broad_per_query: usize,
    pub fillers: usize,
    pub dim: usize,
    pub seed: u64,
    /// Range of cosines between a narrow member and its query axis.
    pub narrow_cos: (f64, f64),
    pub broad_cos: (f64, f64),
    /// Up to this many narrow members per query are left out of the gold list.
    pub gold_drop: usize,
    /// Up to this many filler codes per query are added to the gold list as broad.
    pub gold_extra: usize,
    pub input_style: InputStyle,
}

impl Default for PlantedSpec {
    fn default() -> Self {
        PlantedSpec {
            queries: 50,
            narrow_per_query: 10,
            broad_per_query: 0,
            fillers: 0,
            dim: 128,
            seed: 7,
            narrow_cos: (0.965, 0.995),
            broad_cos: (0.80, 0.88),
            gold_drop: 0,
            gold_extra: 0,
            input_style: InputStyle::FreeText,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedFixture {
    pub spec: PlantedSpec,
    pub dictionary: Dictionary,
    pub store: EmbeddingStore,
    pub gold: Vec<GoldQuery>,
    pub probes: ProbeTable,
    /// Planted members of each query with their scope, in query order.
    pub members: Vec<Vec<(TermCode, Scope)>>,
}

pub fn query_id(q: usize) -> String {
    format!("Q{q:03}")
}

/// Free-text concept label of query `q`; never a lexical match for a term.
pub fn concept_text(q: usize) -> String {
    format!("cluster {q:03} concept")
}

fn member_name(q: usize, scope: Scope, j: usize) -> String {
    let s = match scope {
        Scope::Narrow => "narrow",
        Scope::Broad => "broad",
    };
    format!("Condition {q:03} {s} variant {j:02}")
}

impl PlantedSpec {
    fn noise_dims(&self) -> usize {
        self.dim.saturating_sub(self.queries)
    }

    pub fn build(&self) -> PlantedFixture {
        assert!(
            self.noise_dims() >= 8,
            "dim must exceed the query count by at least 8"
        );
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let dim = self.dim;
        let noise = |rng: &mut ChaCha8Rng| {
            let g = gaussian_vector(rng, self.noise_dims());
            let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            g.into_iter().map(|x| x / n).collect::<Vec<f64>>()
        };
        let at_cos = |rng: &mut ChaCha8Rng, axis: usize, cos: f64| {
            let u = noise(rng);
            let mut v = vec![0.0; dim];
            v[axis] = cos;
            let s = (1.0 - cos * cos).sqrt();
            for (k, x) in u.into_iter().enumerate() {
                v[self.queries + k] = s * x;
            }
            EmbeddingVector::normalize(&v).expect("non-zero")
        };

        let mut terms = Vec::new();
        let mut vectors = Vec::new();
        let mut members = Vec::with_capacity(self.queries);
        let mut next_code = MEMBER_CODE_BASE;
        for q in 0..self.queries {
            let mut own = Vec::new();
            for (scope, count, (lo, hi)) in [
                (Scope::Narrow, self.narrow_per_query, self.narrow_cos),
                (Scope::Broad, self.broad_per_query, self.broad_cos),
            ] {
                for j in 0..count {
                    let code = TermCode(next_code);
                    next_code += 1;
                    let cos = rng.random_range(lo..=hi);
                    vectors.push((code, at_cos(&mut rng, q, cos)));
                    terms.push(PreferredTerm {
                        code,
                        name: member_name(q, scope, j),
                        group: Some(format!("Cluster {q:03}")),
                    });
                    own.push((code, scope));
                }
            }
            members.push(own);
        }
        let fillers: Vec<TermCode> = (0..self.fillers)
            .map(|i| TermCode(FILLER_CODE_BASE + i as u64))
            .collect();
        for (i, &code) in fillers.iter().enumerate() {
            let mut v = vec![0.0; dim];
            for (k, x) in noise(&mut rng).into_iter().enumerate() {
                v[self.queries + k] = x;
            }
            vectors.push((code, EmbeddingVector::normalize(&v).expect("non-zero")));
            terms.push(PreferredTerm {
                code,
                name: format!("Unrelated finding {i:04}"),
                group: None,
            });
        }

        let mut probes = ProbeTable::new();
        let mut gold = Vec::with_capacity(self.queries);
        for (q, own) in members.iter().enumerate() {
            let mut axis = vec![0.0; dim];
            axis[q] = 1.0;
            probes.insert(&concept_text(q), EmbeddingVector::normalize(&axis).unwrap());

            let drop = rng.random_range(0..=self.gold_drop.min(own.len().saturating_sub(1)));
            let mut gold_terms: Vec<GoldTerm> = own
                .iter()
                .enumerate()
                // the first narrow member is never dropped: ExactName inputs point at it
                .filter(|(j, (_, s))| !(*s == Scope::Narrow && *j > 0 && *j <= drop))
                .map(|(_, &(code, scope))| GoldTerm { code, scope })
                .collect();
            let extra = rng.random_range(0..=self.gold_extra.min(fillers.len()));
            gold_terms.extend(
                fillers
                    .choose_multiple(&mut rng, extra)
                    .map(|&code| GoldTerm {
                        code,
                        scope: Scope::Broad,
                    }),
            );
            gold_terms.sort_by_key(|g| g.code);
            let input = match self.input_style {
                InputStyle::FreeText => concept_text(q),
                InputStyle::ExactName => member_name(q, Scope::Narrow, 0),
            };
            gold.push(GoldQuery {
                query_id: query_id(q),
                name: format!("Cluster {q:03}"),
                input_terms: vec![input],
                gold_terms,
            });
        }

        PlantedFixture {
            spec: self.clone(),
            dictionary: Dictionary::from_terms(terms, format!("planted-{}", self.seed))
                .expect("generated names are unique"),
            store: EmbeddingStore::from_vectors(dim, vectors).expect("consistent dims"),
            gold,
            probes,
            members,
        }
    }
}

impl PlantedFixture {
    pub fn gold_json(&self) -> String {
        serde_json::to_string_pretty(&self.gold).expect("gold serializes")
    }
}
