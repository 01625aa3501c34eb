//! Re-ranking scorers.
//!
//! A [`PointwiseScorer`] maps (query, document) to an unbounded relevance
//! score. A [`PairwiseScorer`] maps (query, document A, document B) to the
//! probability that A is the better match. Both are backend-agnostic: the
//! same traits front in-process synthetic scorers and out-of-process model
//! hosts. A "larger model" is just another pointwise scorer bound to a
//! different backend.

mod counting;
mod pairwise;
mod synthetic;
pub mod truncate;

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::corpus::{Document, Query};
use crate::tokenize::Tokenizer;

pub use counting::{CallCounts, Counting};
pub use pairwise::{ordered_pairs, PairwiseScoreMatrix};
pub use synthetic::SyntheticScorer;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoreError {
    #[error("no documents to score")]
    EmptyInput,
    #[error("pairwise scoring needs at least 2 documents, got {n}")]
    TooFewDocuments { n: usize },
    #[error("ensemble has no members")]
    NoMembers,
    #[error("scorer returned {got} scores for {expected} inputs")]
    Alignment { expected: usize, got: usize },
    #[error("pairwise probability {value} for pair ({first}, {second}) is outside [0, 1]")]
    OutOfRange { first: usize, second: usize, value: f64 },
    #[error("pairwise probability {value} for pair ({first:?}, {second:?}) is outside [0, 1]")]
    PairOutOfRange { first: String, second: String, value: f64 },
    #[error("scorer returned a non-finite score for document {doc_id:?}")]
    NonFinite { doc_id: String },
    #[error("scorer {scorer:?} failed: {message} (documents: {doc_ids:?})")]
    Backend {
        scorer: String,
        message: String,
        doc_ids: Vec<String>,
    },
}

impl ScoreError {
    pub fn backend(scorer: impl Into<String>, message: impl Into<String>) -> Self {
        ScoreError::Backend {
            scorer: scorer.into(),
            message: message.into(),
            doc_ids: Vec::new(),
        }
    }

    fn with_doc_ids<'a>(self, ids: impl IntoIterator<Item = &'a str>) -> Self {
        match self {
            ScoreError::Backend {
                scorer,
                message,
                doc_ids,
            } if doc_ids.is_empty() => ScoreError::Backend {
                scorer,
                message,
                doc_ids: ids.into_iter().map(String::from).collect(),
            },
            other => other,
        }
    }
}

/// One document as sent to a scorer backend: its id and its (possibly
/// truncated) text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Passage<'a> {
    pub doc_id: &'a str,
    pub text: String,
}

pub trait PointwiseScorer: Send + Sync {
    fn name(&self) -> &str;

    /// Input window (query plus document) in tokens.
    fn max_input_tokens(&self) -> usize;

    /// One score per passage, order-aligned. Each passage is one inference.
    fn score_batch(&self, query: &Query, passages: &[Passage<'_>]) -> Result<Vec<f64>, ScoreError>;
}

pub trait PairwiseScorer: Send + Sync {
    fn name(&self) -> &str;

    fn max_input_tokens(&self) -> usize;

    /// One probability per `(first, second)` pair, order-aligned. Each pair
    /// is one inference.
    fn score_pairs(&self, query: &Query, pairs: &[(Passage<'_>, Passage<'_>)]) -> Result<Vec<f64>, ScoreError>;
}

impl<T: PointwiseScorer + ?Sized> PointwiseScorer for Arc<T> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn max_input_tokens(&self) -> usize {
        (**self).max_input_tokens()
    }
    fn score_batch(&self, query: &Query, passages: &[Passage<'_>]) -> Result<Vec<f64>, ScoreError> {
        (**self).score_batch(query, passages)
    }
}

impl<T: PairwiseScorer + ?Sized> PairwiseScorer for Arc<T> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn max_input_tokens(&self) -> usize {
        (**self).max_input_tokens()
    }
    fn score_pairs(&self, query: &Query, pairs: &[(Passage<'_>, Passage<'_>)]) -> Result<Vec<f64>, ScoreError> {
        (**self).score_pairs(query, pairs)
    }
}

/// Scores each document against the query with one pointwise model.
///
/// Payloads are cut to the scorer's window, document tail first. The reply
/// must hold one finite score per document.
pub fn score_pointwise(
    scorer: &dyn PointwiseScorer,
    tokenizer: &dyn Tokenizer,
    query: &Query,
    docs: &[&Document],
) -> Result<Vec<f64>, ScoreError> {
    if docs.is_empty() {
        return Err(ScoreError::EmptyInput);
    }
    let query_len = tokenizer.count(&query.text);
    let max = scorer.max_input_tokens();
    let passages: Vec<Passage<'_>> = docs
        .iter()
        .map(|d| Passage {
            doc_id: &d.id,
            text: truncate::pointwise_payload(tokenizer, query_len, &d.text(), max),
        })
        .collect();
    let scores = scorer
        .score_batch(query, &passages)
        .map_err(|e| e.with_doc_ids(docs.iter().map(|d| d.id.as_str())))?;
    if scores.len() != docs.len() {
        return Err(ScoreError::Alignment {
            expected: docs.len(),
            got: scores.len(),
        });
    }
    if let Some(pos) = scores.iter().position(|s| !s.is_finite()) {
        return Err(ScoreError::NonFinite {
            doc_id: docs[pos].id.clone(),
        });
    }
    Ok(scores)
}

/// Elementwise mean of the members' pointwise scores.
///
/// All members must succeed; a single failure fails the whole call.
pub fn score_ensemble<S: PointwiseScorer + ?Sized>(
    members: &[&S],
    tokenizer: &dyn Tokenizer,
    query: &Query,
    docs: &[&Document],
) -> Result<Vec<f64>, ScoreError> {
    if members.is_empty() {
        return Err(ScoreError::NoMembers);
    }
    let mut sums = alloc::vec![0.0; docs.len()];
    for member in members {
        let scores = score_pointwise(&DynPointwise(*member), tokenizer, query, docs)?;
        for (acc, s) in sums.iter_mut().zip(scores) {
            *acc += s;
        }
    }
    let m = members.len() as f64;
    Ok(sums.into_iter().map(|s| s / m).collect())
}

// Lets `score_ensemble` accept both `&[&dyn PointwiseScorer]` and slices of
// concrete scorers.
struct DynPointwise<'a, S: ?Sized>(&'a S);

impl<S: PointwiseScorer + ?Sized> PointwiseScorer for DynPointwise<'_, S> {
    fn name(&self) -> &str {
        self.0.name()
    }
    fn max_input_tokens(&self) -> usize {
        self.0.max_input_tokens()
    }
    fn score_batch(&self, query: &Query, passages: &[Passage<'_>]) -> Result<Vec<f64>, ScoreError> {
        self.0.score_batch(query, passages)
    }
}

/// Scores all `n(n-1)` ordered pairs and aggregates them into one
/// similarity per document (see [`PairwiseScoreMatrix::aggregate`]).
///
/// When a pair exceeds the window, both documents lose the same number of
/// tokens.
pub fn score_pairwise_aggregate(
    scorer: &dyn PairwiseScorer,
    tokenizer: &dyn Tokenizer,
    query: &Query,
    docs: &[&Document],
) -> Result<Vec<f64>, ScoreError> {
    let n = docs.len();
    if n < 2 {
        return Err(ScoreError::TooFewDocuments { n });
    }
    let query_len = tokenizer.count(&query.text);
    let max = scorer.max_input_tokens();
    let texts: Vec<String> = docs.iter().map(|d| d.text()).collect();
    let pairs: Vec<(Passage<'_>, Passage<'_>)> = ordered_pairs(n)
        .map(|(i, j)| {
            let (a, b) = truncate::pairwise_payload(tokenizer, query_len, &texts[i], &texts[j], max);
            (
                Passage {
                    doc_id: &docs[i].id,
                    text: a,
                },
                Passage {
                    doc_id: &docs[j].id,
                    text: b,
                },
            )
        })
        .collect();
    let p = scorer
        .score_pairs(query, &pairs)
        .map_err(|e| e.with_doc_ids(docs.iter().map(|d| d.id.as_str())))?;
    let matrix = PairwiseScoreMatrix::from_off_diagonal(n, &p).map_err(|e| match e {
        ScoreError::OutOfRange { first, second, value } => ScoreError::PairOutOfRange {
            first: docs[first].id.clone(),
            second: docs[second].id.clone(),
            value,
        },
        other => other,
    })?;
    Ok(matrix.aggregate())
}
