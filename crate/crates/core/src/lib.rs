//! Multi-stage re-ranking cascade.
//!
//! A query first goes through BM25 over the whole corpus. The top `a1`
//! documents are re-scored by a pointwise model, the top `a2` of those by a
//! stronger (and slower) scorer, and so on. Cheap stages prune, expensive
//! stages only see a few candidates.
//!
//! This crate is `no_std` (it needs `alloc`). File formats, the external
//! scorer client and the command line live in the `cascade` crate.

#![no_std]

extern crate alloc;

pub mod clock;
pub mod corpus;
pub mod eval;
pub mod index;
pub mod pipeline;
pub mod ranked;
pub mod scorer;
pub mod tokenize;

pub use clock::{Clock, FrozenClock};
pub use corpus::{Corpus, CorpusError, Document, Qrels, QrelsCoverage, Query, QuerySet};
pub use eval::{evaluate, gen_benchmark, ndcg_at_k, sweep_a2, EvalError, EvalReport, SweepPoint};
pub use index::{Bm25Params, IndexError, InvertedIndex, Posting};
pub use pipeline::{
    validate_config, Cascade, CascadeError, CascadeResult, FailurePolicy, PipelineConfig, ScorerBinding,
    ScorerRegistry, StageKind, StageReport, StageSpec, Violation,
};
pub use ranked::{RankedList, ScoredDoc};
pub use scorer::{PairwiseScorer, PointwiseScorer, ScoreError, SyntheticScorer};
pub use tokenize::{tokenize, SimpleTokenizer, TokenStream, Tokenizer};
