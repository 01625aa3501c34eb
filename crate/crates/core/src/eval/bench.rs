//! Seeded synthetic retrieval benchmark.
//!
//! Documents are bags of Zipf-distributed background words. Every query
//! owns a handful of topic words; its relevant documents get some or all of
//! them injected, and a larger set of distractor documents gets a partial
//! overlap. BM25 therefore finds relevant documents in expectation but
//! still ranks distractors among them, which leaves room for re-ranking.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Corpus, Document, Qrels, Query, QuerySet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BenchmarkParams {
    pub seed: u64,
    pub n_docs: usize,
    pub n_queries: usize,
    pub vocab_size: usize,
    pub relevance_per_query: usize,
}

impl Default for BenchmarkParams {
    fn default() -> Self {
        BenchmarkParams {
            seed: 1,
            n_docs: 1000,
            n_queries: 50,
            vocab_size: 5000,
            relevance_per_query: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BenchmarkError {
    #[error("vocab_size must be at least 10, got {0}")]
    VocabTooSmall(usize),
    #[error("n_docs must be at least 10, got {0}")]
    TooFewDocs(usize),
    #[error("relevance_per_query must be in 1..=n_docs, got {0}")]
    BadRelevance(usize),
}

#[derive(Debug, Clone)]
pub struct SyntheticBenchmark {
    pub corpus: Corpus,
    pub queries: QuerySet,
    pub qrels: Qrels,
}

const TOPIC_TERMS: usize = 3;
const DISTRACTORS_PER_RELEVANT: usize = 8;
const MIN_DOC_LEN: usize = 20;
const MAX_DOC_LEN: usize = 60;

fn word(i: usize) -> String {
    format!("t{i:05}")
}

/// Inverse-CDF sampler over ranks with weight `1 / (rank + 1)`.
struct Zipf {
    cumulative: Vec<f64>,
}

impl Zipf {
    fn new(n: usize) -> Self {
        let mut acc = 0.0;
        let cumulative = (0..n)
            .map(|r| {
                acc += 1.0 / (r as f64 + 1.0);
                acc
            })
            .collect();
        Zipf { cumulative }
    }

    fn sample(&self, rng: &mut impl Rng) -> usize {
        let total = *self.cumulative.last().unwrap_or(&0.0);
        let u = rng.gen::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= u).min(self.cumulative.len() - 1)
    }
}

fn inject(rng: &mut impl Rng, words: &mut Vec<usize>, term: usize, copies: usize) {
    for _ in 0..copies {
        let at = rng.gen_range(0..=words.len());
        words.insert(at, term);
    }
}

/// Generates a corpus, query set and graded qrels, fully determined by
/// `params`.
pub fn gen_benchmark(params: &BenchmarkParams) -> Result<SyntheticBenchmark, BenchmarkError> {
    if params.vocab_size < 10 {
        return Err(BenchmarkError::VocabTooSmall(params.vocab_size));
    }
    if params.n_docs < 10 {
        return Err(BenchmarkError::TooFewDocs(params.n_docs));
    }
    if params.relevance_per_query == 0 || params.relevance_per_query > params.n_docs {
        return Err(BenchmarkError::BadRelevance(params.relevance_per_query));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let zipf = Zipf::new(params.vocab_size);

    let mut bodies: Vec<Vec<usize>> = (0..params.n_docs)
        .map(|_| {
            let len = rng.gen_range(MIN_DOC_LEN..=MAX_DOC_LEN);
            (0..len).map(|_| zipf.sample(&mut rng)).collect()
        })
        .collect();
    let titles: Vec<Vec<usize>> = (0..params.n_docs)
        .map(|_| {
            if rng.gen_bool(0.5) {
                (0..3).map(|_| zipf.sample(&mut rng)).collect()
            } else {
                Vec::new()
            }
        })
        .collect();

    let doc_ids: Vec<String> = (0..params.n_docs).map(|i| format!("doc{i:06}")).collect();
    let ordinals: Vec<usize> = (0..params.n_docs).collect();
    let mut queries = QuerySet::new();
    let mut qrels = Qrels::new();

    for qi in 0..params.n_queries {
        let query_id = format!("q{qi:04}");
        // Topic words come from the rarer half of the vocabulary.
        let topic: Vec<usize> = (0..TOPIC_TERMS)
            .map(|_| rng.gen_range(params.vocab_size / 2..params.vocab_size))
            .collect();
        let mut query_words = topic.clone();
        query_words.push(zipf.sample(&mut rng));
        let text: Vec<String> = query_words.iter().map(|&w| word(w)).collect();
        queries
            .push(Query::new(query_id.clone(), text.join(" ")))
            .expect("generated query ids are unique");

        let n_distractors = (params.relevance_per_query * DISTRACTORS_PER_RELEVANT)
            .min(params.n_docs - params.relevance_per_query);
        let picked: Vec<usize> = ordinals
            .choose_multiple(&mut rng, params.relevance_per_query + n_distractors)
            .copied()
            .collect();
        let (relevant, distractors) = picked.split_at(params.relevance_per_query);

        for (rank, &d) in relevant.iter().enumerate() {
            let grade = if rank == 0 && params.relevance_per_query > 1 { 2 } else { 1 };
            qrels.insert(query_id.clone(), doc_ids[d].clone(), grade);
            let shared = if grade == 2 { TOPIC_TERMS } else { rng.gen_range(1..=TOPIC_TERMS) };
            let mut terms = topic.clone();
            terms.shuffle(&mut rng);
            for &t in &terms[..shared] {
                let copies = if grade == 2 { rng.gen_range(1..=2) } else { 1 };
                inject(&mut rng, &mut bodies[d], t, copies);
            }
        }
        for &d in distractors {
            let mut terms = topic.clone();
            terms.shuffle(&mut rng);
            for &t in &terms[..rng.gen_range(1..TOPIC_TERMS)] {
                let copies = rng.gen_range(1..=3);
                inject(&mut rng, &mut bodies[d], t, copies);
            }
        }
    }

    let render = |words: &[usize]| {
        let parts: Vec<String> = words.iter().map(|&w| word(w)).collect();
        parts.join(" ")
    };
    let corpus = Corpus::from_documents(
        doc_ids
            .iter()
            .zip(titles.iter().zip(&bodies))
            .map(|(id, (title, body))| Document::new(id.clone(), render(title), render(body))),
    )
    .expect("generated doc ids are unique");

    Ok(SyntheticBenchmark {
        corpus,
        queries,
        qrels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic() {
        let p = BenchmarkParams {
            n_docs: 200,
            n_queries: 10,
            ..Default::default()
        };
        let a = gen_benchmark(&p).unwrap();
        let b = gen_benchmark(&p).unwrap();
        assert_eq!(a.corpus.documents(), b.corpus.documents());
        assert_eq!(a.queries.queries(), b.queries.queries());
        assert_eq!(a.qrels, b.qrels);
        let c = gen_benchmark(&BenchmarkParams { seed: 2, ..p }).unwrap();
        assert_ne!(a.corpus.documents(), c.corpus.documents());
    }

    #[test]
    fn every_query_has_a_relevant_doc() {
        let b = gen_benchmark(&BenchmarkParams::default()).unwrap();
        assert_eq!(b.corpus.len(), 1000);
        assert_eq!(b.queries.len(), 50);
        for q in b.queries.iter() {
            assert!(b.qrels.has_relevant(&q.id), "{}", q.id);
        }
        let cov = b.qrels.coverage(&b.queries, Some(&b.corpus));
        assert!(cov.is_complete());
    }

    #[test]
    fn degenerate_parameters() {
        let p = BenchmarkParams::default();
        assert_eq!(
            gen_benchmark(&BenchmarkParams { vocab_size: 9, ..p }).unwrap_err(),
            BenchmarkError::VocabTooSmall(9)
        );
        assert_eq!(
            gen_benchmark(&BenchmarkParams { n_docs: 5, ..p }).unwrap_err(),
            BenchmarkError::TooFewDocs(5)
        );
        assert_eq!(
            gen_benchmark(&BenchmarkParams { relevance_per_query: 0, ..p }).unwrap_err(),
            BenchmarkError::BadRelevance(0)
        );
    }
}
