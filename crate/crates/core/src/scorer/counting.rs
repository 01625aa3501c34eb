use alloc::vec::Vec;
use core::sync::atomic::{AtomicUsize, Ordering};

use super::{Passage, PairwiseScorer, PointwiseScorer, ScoreError};
use crate::corpus::Query;

/// Inference and batch counters recorded by [`Counting`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CallCounts {
    /// Individual (query, document) or (query, pair) inferences.
    pub inferences: u64,
    /// `score_batch` / `score_pairs` invocations.
    pub batches: u64,
}

/// Wraps a scorer and counts what reaches it.
#[derive(Debug, Default)]
pub struct Counting<S> {
    inner: S,
    inferences: AtomicUsize,
    batches: AtomicUsize,
}

impl<S> Counting<S> {
    pub fn new(inner: S) -> Self {
        Counting {
            inner,
            inferences: AtomicUsize::new(0),
            batches: AtomicUsize::new(0),
        }
    }

    pub fn counts(&self) -> CallCounts {
        CallCounts {
            inferences: self.inferences.load(Ordering::Relaxed) as u64,
            batches: self.batches.load(Ordering::Relaxed) as u64,
        }
    }

    pub fn reset(&self) {
        self.inferences.store(0, Ordering::Relaxed);
        self.batches.store(0, Ordering::Relaxed);
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }

    fn record(&self, n: usize) {
        self.inferences.fetch_add(n, Ordering::Relaxed);
        self.batches.fetch_add(1, Ordering::Relaxed);
    }
}

impl<S: PointwiseScorer> PointwiseScorer for Counting<S> {
    fn name(&self) -> &str {
        self.inner.name()
    }
    fn max_input_tokens(&self) -> usize {
        self.inner.max_input_tokens()
    }
    fn score_batch(&self, query: &Query, passages: &[Passage<'_>]) -> Result<Vec<f64>, ScoreError> {
        self.record(passages.len());
        self.inner.score_batch(query, passages)
    }
}

impl<S: PairwiseScorer> PairwiseScorer for Counting<S> {
    fn name(&self) -> &str {
        self.inner.name()
    }
    fn max_input_tokens(&self) -> usize {
        self.inner.max_input_tokens()
    }
    fn score_pairs(&self, query: &Query, pairs: &[(Passage<'_>, Passage<'_>)]) -> Result<Vec<f64>, ScoreError> {
        self.record(pairs.len());
        self.inner.score_pairs(query, pairs)
    }
}
