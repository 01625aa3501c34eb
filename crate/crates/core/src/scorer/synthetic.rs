//! Deterministic relevance-oracle scorers for experiments without models.
//!
//! A synthetic scorer reads the true grade `g` of each document from qrels
//! and blends it with seeded Gaussian noise `z`:
//!
//! ```text
//! pointwise score  = q * g + (1 - q) * 0.6 * z
//! pairwise p(a, b) = sigmoid((q * (g_a - g_b) + (1 - q) * 0.6 * z_ab) / 0.25)
//! ```
//!
//! `q = 1` is a perfect oracle, `q = 0` is pure noise. Noise is a hash of
//! (seed, query id, document ids), so scores do not depend on batch
//! composition or call order.

use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use sha2::{Digest, Sha256};

use super::{Passage, PairwiseScorer, PointwiseScorer, ScoreError};
use crate::corpus::{Qrels, Query};

const PAIR_TEMPERATURE: f64 = 0.25;
const NOISE_SCALE: f64 = 0.6;

#[derive(Debug, Clone)]
pub struct SyntheticScorer {
    name: String,
    quality: f64,
    seed: u64,
    max_input_tokens: usize,
    oracle: Arc<Qrels>,
}

impl SyntheticScorer {
    pub fn new(name: impl Into<String>, quality: f64, seed: u64, oracle: Arc<Qrels>) -> Result<Self, ScoreError> {
        if !(0.0..=1.0).contains(&quality) {
            return Err(ScoreError::backend(
                name,
                alloc::format!("synthetic quality {quality} is outside [0, 1]"),
            ));
        }
        Ok(SyntheticScorer {
            name: name.into(),
            quality,
            seed,
            max_input_tokens: 512,
            oracle,
        })
    }

    pub fn with_max_input_tokens(mut self, max: usize) -> Self {
        self.max_input_tokens = max;
        self
    }

    pub fn quality(&self) -> f64 {
        self.quality
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn grade(&self, query: &Query, doc_id: &str) -> f64 {
        f64::from(self.oracle.grade(&query.id, doc_id).unwrap_or(0))
    }

    /// Standard normal draw keyed on the seed, query and document ids.
    fn noise(&self, query: &Query, doc_ids: &[&str]) -> f64 {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        for part in core::iter::once(query.id.as_str()).chain(doc_ids.iter().copied()) {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part.as_bytes());
        }
        let digest = h.finalize();
        let word = |i: usize| {
            let mut b = [0u8; 8];
            b.copy_from_slice(&digest[i * 8..i * 8 + 8]);
            u64::from_le_bytes(b)
        };
        // Box-Muller; u1 in (0, 1] keeps the log finite.
        let u1 = ((word(0) >> 11) + 1) as f64 / (1u64 << 53) as f64;
        let u2 = (word(1) >> 11) as f64 / (1u64 << 53) as f64;
        libm::sqrt(-2.0 * libm::log(u1)) * libm::cos(2.0 * core::f64::consts::PI * u2)
    }

    pub fn pointwise(&self, query: &Query, doc_id: &str) -> f64 {
        let q = self.quality;
        q * self.grade(query, doc_id) + (1.0 - q) * NOISE_SCALE * self.noise(query, &[doc_id])
    }

    pub fn preference(&self, query: &Query, first: &str, second: &str) -> f64 {
        let q = self.quality;
        let margin = q * (self.grade(query, first) - self.grade(query, second))
            + (1.0 - q) * NOISE_SCALE * self.noise(query, &[first, second]);
        1.0 / (1.0 + libm::exp(-margin / PAIR_TEMPERATURE))
    }
}

impl PointwiseScorer for SyntheticScorer {
    fn name(&self) -> &str {
        &self.name
    }
    fn max_input_tokens(&self) -> usize {
        self.max_input_tokens
    }
    fn score_batch(&self, query: &Query, passages: &[Passage<'_>]) -> Result<Vec<f64>, ScoreError> {
        Ok(passages.iter().map(|p| self.pointwise(query, p.doc_id)).collect())
    }
}

impl PairwiseScorer for SyntheticScorer {
    fn name(&self) -> &str {
        &self.name
    }
    fn max_input_tokens(&self) -> usize {
        self.max_input_tokens
    }
    fn score_pairs(&self, query: &Query, pairs: &[(Passage<'_>, Passage<'_>)]) -> Result<Vec<f64>, ScoreError> {
        Ok(pairs
            .iter()
            .map(|(a, b)| self.preference(query, a.doc_id, b.doc_id))
            .collect())
    }
}
