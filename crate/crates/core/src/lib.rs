//! Automated medical query (AMQ) retrieval.
//!
//! Matches a free-text medical concept to dictionary preferred terms, scores
//! the whole dictionary by cosine similarity against a probe built from the
//! matched terms, picks a similarity threshold automatically (exact 1-D
//! two-means plus Kneedle knee detection) and returns a ranked term list.
//! The [`evaluation`] module scores retrieval against gold query sets over a
//! grid of similarity cut-offs.

pub mod corpus;
pub mod embedding;
pub mod evaluation;
pub mod fixture;
pub mod lexical;
pub mod pipeline;
pub mod report;
pub mod study;
pub mod threshold;

pub use corpus::{Dictionary, GoldQuery, GoldSet, GoldTerm, PreferredTerm, Scope, TermCode};
pub use embedding::{EmbeddingStore, EmbeddingVector};
pub use lexical::{best_lexical, lexical_ratio, LexicalMatch};
pub use pipeline::{
    EmbeddingProvider, MatchKind, PipelineConfig, ProbeTable, QueryInput, RetrievalResult,
    ScoredTerm,
};
pub use threshold::{auto_threshold, kneedle, pearson, two_means, ThresholdDecision};
