//! In-memory inverted index with Okapi BM25 scoring.
//!
//! Term weight for one query-term instance `t` against document `d`:
//!
//! ```text
//! idf(t) * tf / (tf + k1 * (1 - b + b * len(d) / avg_len))
//! idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5))
//! ```
//!
//! A document's score is the sum over query-term instances, so a term that
//! appears twice in the query counts twice.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::Corpus;
use crate::ranked::{rank_order, RankedList, ScoredDoc};
use crate::tokenize::Tokenizer;

pub const BM25_PROVENANCE: &str = "bm25";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IndexError {
    #[error("cannot index an empty corpus")]
    EmptyCorpus,
    #[error("invalid BM25 parameters: k1={k1}, b={b} (need k1 >= 0 and 0 <= b <= 1)")]
    InvalidParams { k1: f64, b: f64 },
    #[error("corrupt index: {0}")]
    Corrupt(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
}

impl Bm25Params {
    pub fn new(k1: f64, b: f64) -> Result<Self, IndexError> {
        let params = Bm25Params { k1, b };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), IndexError> {
        // NaN fails both comparisons.
        if self.k1 >= 0.0 && (0.0..=1.0).contains(&self.b) && self.k1.is_finite() {
            Ok(())
        } else {
            Err(IndexError::InvalidParams {
                k1: self.k1,
                b: self.b,
            })
        }
    }
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params { k1: 0.9, b: 0.4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Posting {
    pub doc: u32,
    pub tf: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvertedIndex {
    postings: BTreeMap<String, Vec<Posting>>,
    doc_lengths: Vec<u32>,
    avg_doc_length: f64,
    doc_ids: Vec<String>,
    ordinals: BTreeMap<String, u32>,
}

impl InvertedIndex {
    /// Indexes `title + " " + body` of every document, in corpus order.
    pub fn build(corpus: &Corpus, tokenizer: &dyn Tokenizer) -> Result<Self, IndexError> {
        if corpus.is_empty() {
            return Err(IndexError::EmptyCorpus);
        }
        let mut postings: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
        let mut doc_lengths = Vec::with_capacity(corpus.len());
        let mut doc_ids = Vec::with_capacity(corpus.len());
        let mut term_freqs: BTreeMap<String, u32> = BTreeMap::new();

        for (ordinal, doc) in corpus.iter().enumerate() {
            let tokens = tokenizer.tokenize(&doc.text());
            doc_lengths.push(tokens.len() as u32);
            doc_ids.push(doc.id.clone());
            term_freqs.clear();
            for token in tokens {
                *term_freqs.entry(token).or_insert(0) += 1;
            }
            // Ordinals are visited in increasing order, so every list stays sorted.
            for (term, &tf) in &term_freqs {
                let posting = Posting {
                    doc: ordinal as u32,
                    tf,
                };
                match postings.get_mut(term) {
                    Some(list) => list.push(posting),
                    None => {
                        postings.insert(term.clone(), vec![posting]);
                    }
                }
            }
        }
        Self::from_parts(postings, doc_lengths, doc_ids)
    }

    /// Assembles an index from raw parts, checking every structural
    /// invariant. Used by snapshot loading.
    pub fn from_parts(
        postings: BTreeMap<String, Vec<Posting>>,
        doc_lengths: Vec<u32>,
        doc_ids: Vec<String>,
    ) -> Result<Self, IndexError> {
        let doc_count = doc_lengths.len();
        if doc_count == 0 {
            return Err(IndexError::EmptyCorpus);
        }
        if doc_ids.len() != doc_count {
            return Err(IndexError::Corrupt("doc id table and length table differ in size".into()));
        }
        let mut ordinals = BTreeMap::new();
        for (i, id) in doc_ids.iter().enumerate() {
            if id.is_empty() || ordinals.insert(id.clone(), i as u32).is_some() {
                return Err(IndexError::Corrupt(alloc::format!("bad doc id at ordinal {i}")));
            }
        }
        for (term, list) in &postings {
            if list.is_empty() {
                return Err(IndexError::Corrupt(alloc::format!("empty posting list for {term:?}")));
            }
            let mut prev: Option<u32> = None;
            for p in list {
                if p.tf == 0 || p.doc as usize >= doc_count || prev.is_some_and(|d| d >= p.doc) {
                    return Err(IndexError::Corrupt(alloc::format!("bad posting for {term:?}")));
                }
                prev = Some(p.doc);
            }
        }
        let total: u64 = doc_lengths.iter().map(|&l| u64::from(l)).sum();
        let avg_doc_length = total as f64 / doc_count as f64;
        Ok(InvertedIndex {
            postings,
            doc_lengths,
            avg_doc_length,
            doc_ids,
            ordinals,
        })
    }

    pub fn doc_count(&self) -> usize {
        self.doc_lengths.len()
    }

    pub fn avg_doc_length(&self) -> f64 {
        self.avg_doc_length
    }

    pub fn vocabulary_size(&self) -> usize {
        self.postings.len()
    }

    pub fn doc_lengths(&self) -> &[u32] {
        &self.doc_lengths
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn doc_id(&self, ordinal: usize) -> Option<&str> {
        self.doc_ids.get(ordinal).map(String::as_str)
    }

    pub fn ordinal(&self, doc_id: &str) -> Option<usize> {
        self.ordinals.get(doc_id).map(|&o| o as usize)
    }

    pub fn postings(&self, term: &str) -> Option<&[Posting]> {
        self.postings.get(term).map(Vec::as_slice)
    }

    /// All terms with their posting lists, in term order.
    pub fn terms(&self) -> impl Iterator<Item = (&str, &[Posting])> {
        self.postings.iter().map(|(t, l)| (t.as_str(), l.as_slice()))
    }

    fn idf(&self, df: usize) -> f64 {
        let n = self.doc_count() as f64;
        let df = df as f64;
        libm::log(1.0 + (n - df + 0.5) / (df + 0.5))
    }

    fn term_weight(&self, params: &Bm25Params, idf: f64, tf: u32, ordinal: usize) -> f64 {
        let tf = f64::from(tf);
        let len = f64::from(self.doc_lengths[ordinal]);
        let norm = 1.0 - params.b + params.b * len / self.avg_doc_length;
        idf * tf / (tf + params.k1 * norm)
    }

    /// BM25 score of one document. Panics if `ordinal >= doc_count`.
    pub fn bm25_score<S: AsRef<str>>(&self, params: &Bm25Params, query_tokens: &[S], ordinal: usize) -> f64 {
        assert!(ordinal < self.doc_count(), "ordinal {ordinal} out of range");
        let mut score = 0.0;
        for token in query_tokens {
            let Some(list) = self.postings.get(token.as_ref()) else {
                continue;
            };
            if let Ok(pos) = list.binary_search_by_key(&(ordinal as u32), |p| p.doc) {
                let idf = self.idf(list.len());
                score += self.term_weight(params, idf, list[pos].tf, ordinal);
            }
        }
        score
    }

    /// Top `k` documents by BM25, ordered by (score desc, doc id asc).
    /// Documents scoring exactly zero are never returned, so the list can be
    /// shorter than `k`.
    pub fn bm25_topk<S: AsRef<str>>(&self, params: &Bm25Params, query_tokens: &[S], k: usize) -> RankedList {
        let mut acc = vec![0.0f64; self.doc_count()];
        let mut touched: Vec<u32> = Vec::new();
        // Accumulate in query-token order so every document's sum matches
        // `bm25_score` bit for bit.
        for token in query_tokens {
            let Some(list) = self.postings.get(token.as_ref()) else {
                continue;
            };
            let idf = self.idf(list.len());
            for p in list {
                let slot = &mut acc[p.doc as usize];
                if *slot == 0.0 {
                    touched.push(p.doc);
                }
                *slot += self.term_weight(params, idf, p.tf, p.doc as usize);
            }
        }
        touched.sort_unstable();
        touched.dedup();

        let mut hits: Vec<(f64, u32)> = touched
            .into_iter()
            .map(|d| (acc[d as usize], d))
            .filter(|&(s, _)| s > 0.0)
            .collect();
        let cmp = |a: &(f64, u32), b: &(f64, u32)| {
            rank_order(a.0, &self.doc_ids[a.1 as usize], b.0, &self.doc_ids[b.1 as usize])
        };
        if k == 0 {
            hits.clear();
        } else if hits.len() > k {
            hits.select_nth_unstable_by(k - 1, cmp);
            hits.truncate(k);
        }
        hits.sort_unstable_by(cmp);
        RankedList {
            entries: hits
                .into_iter()
                .map(|(score, d)| ScoredDoc {
                    doc_id: self.doc_ids[d as usize].to_string(),
                    score,
                })
                .collect(),
            provenance: BM25_PROVENANCE.into(),
        }
    }
}
