//! The n-stage re-ranking cascade.
//!
//! Stage 0 is always BM25 over the whole corpus and keeps the top `a1`
//! documents. Every later stage re-scores exactly the documents it receives,
//! orders them by its own scores (score desc, doc id asc) and passes the top
//! `a(i+1)` on. Scores never cross stage boundaries.
//!
//! The final ranking is the last stage's full ordering of its input,
//! followed by the documents each earlier re-ranking stage cut, in that
//! stage's order, walking back towards stage 1. It therefore always holds
//! exactly the `a1` documents BM25 returned.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::time::Duration;

use crate::clock::Clock;
use crate::corpus::{Corpus, Document, Query};
use crate::index::{Bm25Params, InvertedIndex};
use crate::ranked::{RankedList, ScoredDoc};
use crate::scorer::{self, PairwiseScorer, PointwiseScorer, ScoreError};
use crate::tokenize::Tokenizer;

pub const CASCADE_PROVENANCE: &str = "cascade";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum StageKind {
    Bm25,
    Pointwise,
    Ensemble,
    Pairwise,
}

impl fmt::Display for StageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StageKind::Bm25 => "bm25",
            StageKind::Pointwise => "pointwise",
            StageKind::Ensemble => "ensemble",
            StageKind::Pairwise => "pairwise",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StageSpec {
    pub kind: StageKind,
    /// Registry name of the scorer; absent for BM25.
    #[cfg_attr(feature = "serde", serde(default, skip_serializing_if = "Option::is_none"))]
    pub scorer: Option<String>,
    /// Number of documents this stage passes on.
    pub cutoff: usize,
}

impl StageSpec {
    pub fn bm25(cutoff: usize) -> Self {
        StageSpec {
            kind: StageKind::Bm25,
            scorer: None,
            cutoff,
        }
    }

    pub fn rerank(kind: StageKind, scorer: impl Into<String>, cutoff: usize) -> Self {
        StageSpec {
            kind,
            scorer: Some(scorer.into()),
            cutoff,
        }
    }

    /// Scorer name, or `bm25` for the first stage.
    pub fn label(&self) -> &str {
        self.scorer.as_deref().unwrap_or("bm25")
    }
}

/// What to do when a re-ranking stage fails for a query.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum FailurePolicy {
    /// The query fails.
    #[default]
    Fail,
    /// Keep the ranking produced by the stages that completed.
    FallbackToPrevious,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PipelineConfig {
    pub stages: Vec<StageSpec>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub bm25: Bm25Params,
    #[cfg_attr(feature = "serde", serde(default))]
    pub on_error: FailurePolicy,
}

impl PipelineConfig {
    pub fn new(stages: Vec<StageSpec>) -> Self {
        PipelineConfig {
            stages,
            bm25: Bm25Params::default(),
            on_error: FailurePolicy::Fail,
        }
    }

    /// The sequence a1, a2, ... (stage output cutoffs).
    pub fn cutoffs(&self) -> Vec<usize> {
        self.stages.iter().map(|s| s.cutoff).collect()
    }

    /// Stable textual form covering every field that affects rankings.
    pub fn canonical(&self) -> String {
        let mut out = alloc::format!("bm25(k1={:?},b={:?});on_error={:?}", self.bm25.k1, self.bm25.b, self.on_error);
        for s in &self.stages {
            out.push_str(&alloc::format!(";{}:{}:{}", s.kind, s.label(), s.cutoff));
        }
        out
    }
}

/// A named scorer the cascade can bind stages to.
#[derive(Clone)]
pub enum ScorerBinding {
    Pointwise(Arc<dyn PointwiseScorer>),
    Ensemble(Vec<Arc<dyn PointwiseScorer>>),
    Pairwise(Arc<dyn PairwiseScorer>),
}

impl ScorerBinding {
    pub fn kind(&self) -> StageKind {
        match self {
            ScorerBinding::Pointwise(_) => StageKind::Pointwise,
            ScorerBinding::Ensemble(_) => StageKind::Ensemble,
            ScorerBinding::Pairwise(_) => StageKind::Pairwise,
        }
    }
}

impl fmt::Debug for ScorerBinding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScorerBinding::Pointwise(s) => write!(f, "Pointwise({})", s.name()),
            ScorerBinding::Ensemble(m) => {
                let names: Vec<&str> = m.iter().map(|s| s.name()).collect();
                write!(f, "Ensemble({names:?})")
            }
            ScorerBinding::Pairwise(s) => write!(f, "Pairwise({})", s.name()),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ScorerRegistry {
    bindings: BTreeMap<String, ScorerBinding>,
}

impl ScorerRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, binding: ScorerBinding) -> &mut Self {
        self.bindings.insert(name.into(), binding);
        self
    }

    pub fn pointwise(&mut self, name: impl Into<String>, scorer: Arc<dyn PointwiseScorer>) -> &mut Self {
        self.insert(name, ScorerBinding::Pointwise(scorer))
    }

    pub fn ensemble(&mut self, name: impl Into<String>, members: Vec<Arc<dyn PointwiseScorer>>) -> &mut Self {
        self.insert(name, ScorerBinding::Ensemble(members))
    }

    pub fn pairwise(&mut self, name: impl Into<String>, scorer: Arc<dyn PairwiseScorer>) -> &mut Self {
        self.insert(name, ScorerBinding::Pairwise(scorer))
    }

    pub fn get(&self, name: &str) -> Option<&ScorerBinding> {
        self.bindings.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.bindings.keys().map(String::as_str)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Rule {
    NoStages,
    FirstStageNotBm25,
    Bm25OnlyAtStageZero,
    CutoffIncreasing { previous: usize, cutoff: usize },
    MissingScorer,
    UnexpectedScorer,
    UnresolvedScorer(String),
    ScorerKindMismatch { scorer: String, expected: StageKind, found: StageKind },
    EmptyEnsemble(String),
    InvalidBm25Params,
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rule::NoStages => f.write_str("pipeline has no stages"),
            Rule::FirstStageNotBm25 => f.write_str("stage 0 must be bm25"),
            Rule::Bm25OnlyAtStageZero => f.write_str("bm25 only at stage 0"),
            Rule::CutoffIncreasing { previous, cutoff } => write!(
                f,
                "cutoff non-increasing: {cutoff} exceeds the previous stage's {previous}"
            ),
            Rule::MissingScorer => f.write_str("re-ranking stage needs a scorer binding"),
            Rule::UnexpectedScorer => f.write_str("bm25 stage takes no scorer binding"),
            Rule::UnresolvedScorer(name) => write!(f, "scorer {name:?} is not configured"),
            Rule::ScorerKindMismatch {
                scorer,
                expected,
                found,
            } => write!(f, "scorer {scorer:?} is {found}, stage expects {expected}"),
            Rule::EmptyEnsemble(name) => write!(f, "ensemble {name:?} has no members"),
            Rule::InvalidBm25Params => f.write_str("bm25 parameters need k1 >= 0 and 0 <= b <= 1"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub stage: usize,
    pub rule: Rule,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "stage {}: {}", self.stage, self.rule)
    }
}

/// Checks the stage list and, when a registry is given, that every scorer
/// binding resolves to a scorer of the right kind. Returns every violation
/// found; an empty list means the config is valid.
pub fn validate_config(config: &PipelineConfig, registry: Option<&ScorerRegistry>) -> Vec<Violation> {
    let mut out = Vec::new();
    if config.bm25.validate().is_err() {
        out.push(Violation {
            stage: 0,
            rule: Rule::InvalidBm25Params,
        });
    }
    if config.stages.is_empty() {
        out.push(Violation {
            stage: 0,
            rule: Rule::NoStages,
        });
        return out;
    }
    let mut push = |stage, rule| out.push(Violation { stage, rule });
    for (i, stage) in config.stages.iter().enumerate() {
        match (i, stage.kind) {
            (0, StageKind::Bm25) => {}
            (0, _) => push(0, Rule::FirstStageNotBm25),
            (_, StageKind::Bm25) => push(i, Rule::Bm25OnlyAtStageZero),
            _ => {}
        }
        if i > 0 {
            let previous = config.stages[i - 1].cutoff;
            if stage.cutoff > previous {
                push(i, Rule::CutoffIncreasing {
                    previous,
                    cutoff: stage.cutoff,
                });
            }
        }
        match (stage.kind, &stage.scorer) {
            (StageKind::Bm25, Some(_)) => push(i, Rule::UnexpectedScorer),
            (StageKind::Bm25, None) => {}
            (_, None) => push(i, Rule::MissingScorer),
            (expected, Some(name)) => {
                let Some(registry) = registry else { continue };
                match registry.get(name) {
                    None => push(i, Rule::UnresolvedScorer(name.clone())),
                    Some(binding) if binding.kind() != expected => push(i, Rule::ScorerKindMismatch {
                        scorer: name.clone(),
                        expected,
                        found: binding.kind(),
                    }),
                    Some(ScorerBinding::Ensemble(members)) if members.is_empty() => {
                        push(i, Rule::EmptyEnsemble(name.clone()))
                    }
                    Some(_) => {}
                }
            }
        }
    }
    out
}

/// Per-stage telemetry for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub name: String,
    pub kind: StageKind,
    /// Documents the stage ranked. For BM25 this is the corpus size.
    pub input_size: usize,
    pub output_size: usize,
    /// Model inferences issued: |input| per pointwise model, |input|(|input|-1)
    /// for pairwise, zero for BM25.
    pub scorer_calls: u64,
    pub elapsed: Duration,
    /// The stage's ordering of everything it ranked, with its own scores.
    /// For BM25 this is the top `a1` only.
    pub ranking: RankedList,
    /// Set when the stage failed and the failure policy let the query go on.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeResult {
    pub query_id: String,
    /// Final order. Scores are positional (`len - rank`), since scores from
    /// different stages are not comparable.
    pub final_ranking: RankedList,
    pub stages: Vec<StageReport>,
    pub elapsed: Duration,
}

impl CascadeResult {
    pub fn total_scorer_calls(&self) -> u64 {
        self.stages.iter().map(|s| s.scorer_calls).sum()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CascadeError {
    #[error("invalid pipeline config: {}", join_violations(.0))]
    InvalidConfig(Vec<Violation>),
    #[error("query {query_id:?}: stage {stage} ({name}) failed: {source}")]
    Stage {
        query_id: String,
        stage: usize,
        name: String,
        #[source]
        source: alloc::boxed::Box<ScoreError>,
    },
    #[error("document {0:?} is in the index but not in the corpus")]
    UnknownDocument(String),
}

fn join_violations(v: &[Violation]) -> String {
    let parts: Vec<String> = v.iter().map(ToString::to_string).collect();
    parts.join("; ")
}

/// A validated cascade bound to an index, its corpus and a scorer registry.
pub struct Cascade<'a> {
    index: &'a InvertedIndex,
    corpus: &'a Corpus,
    tokenizer: &'a dyn Tokenizer,
    registry: &'a ScorerRegistry,
    config: PipelineConfig,
    clock: &'a dyn Clock,
}

impl<'a> Cascade<'a> {
    pub fn new(
        config: PipelineConfig,
        index: &'a InvertedIndex,
        corpus: &'a Corpus,
        tokenizer: &'a dyn Tokenizer,
        registry: &'a ScorerRegistry,
        clock: &'a dyn Clock,
    ) -> Result<Self, CascadeError> {
        let violations = validate_config(&config, Some(registry));
        if !violations.is_empty() {
            return Err(CascadeError::InvalidConfig(violations));
        }
        Ok(Cascade {
            index,
            corpus,
            tokenizer,
            registry,
            config,
            clock,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// Same bindings, different config.
    pub fn with_config(&self, config: PipelineConfig) -> Result<Cascade<'a>, CascadeError> {
        Cascade::new(config, self.index, self.corpus, self.tokenizer, self.registry, self.clock)
    }

    pub fn clock(&self) -> &'a dyn Clock {
        self.clock
    }

    pub fn run(&self, query: &Query) -> Result<CascadeResult, CascadeError> {
        let started = self.clock.now();
        let mut reports: Vec<StageReport> = Vec::with_capacity(self.config.stages.len());

        let first = &self.config.stages[0];
        let t0 = self.clock.now();
        let tokens = self.tokenizer.tokenize(&query.text);
        let bm25 = self.index.bm25_topk(&self.config.bm25, &tokens, first.cutoff);
        reports.push(StageReport {
            name: first.label().to_string(),
            kind: StageKind::Bm25,
            input_size: self.index.doc_count(),
            output_size: bm25.len(),
            scorer_calls: 0,
            elapsed: self.clock.now().saturating_sub(t0),
            ranking: bm25,
            error: None,
        });

        for (i, stage) in self.config.stages.iter().enumerate().skip(1) {
            let prev = &reports[i - 1];
            let input: Vec<&Document> = prev
                .ranking
                .doc_ids()
                .take(prev.output_size)
                .map(|id| self.corpus.get(id).ok_or_else(|| CascadeError::UnknownDocument(id.into())))
                .collect::<Result<_, _>>()?;
            let t0 = self.clock.now();
            let outcome = self.score_stage(stage, query, &input);
            let elapsed = self.clock.now().saturating_sub(t0);
            match outcome {
                Ok((scores, calls)) => {
                    let ranking = RankedList::from_unsorted(
                        input
                            .iter()
                            .zip(scores)
                            .map(|(d, score)| ScoredDoc {
                                doc_id: d.id.clone(),
                                score,
                            })
                            .collect(),
                        stage.label(),
                    );
                    reports.push(StageReport {
                        name: stage.label().to_string(),
                        kind: stage.kind,
                        input_size: input.len(),
                        output_size: stage.cutoff.min(input.len()),
                        scorer_calls: calls,
                        elapsed,
                        ranking,
                        error: None,
                    });
                }
                Err(source) => match self.config.on_error {
                    FailurePolicy::Fail => {
                        return Err(CascadeError::Stage {
                            query_id: query.id.clone(),
                            stage: i,
                            name: stage.label().to_string(),
                            source: alloc::boxed::Box::new(source),
                        })
                    }
                    FailurePolicy::FallbackToPrevious => {
                        reports.push(StageReport {
                            name: stage.label().to_string(),
                            kind: stage.kind,
                            input_size: input.len(),
                            output_size: 0,
                            scorer_calls: 0,
                            elapsed,
                            ranking: RankedList::empty(stage.label()),
                            error: Some(source.to_string()),
                        });
                        break;
                    }
                },
            }
        }

        let final_ranking = assemble_final(&reports);
        Ok(CascadeResult {
            query_id: query.id.clone(),
            final_ranking,
            stages: reports,
            elapsed: self.clock.now().saturating_sub(started),
        })
    }

    fn score_stage(&self, stage: &StageSpec, query: &Query, input: &[&Document]) -> Result<(Vec<f64>, u64), ScoreError> {
        let n = input.len();
        if n == 0 {
            return Ok((Vec::new(), 0));
        }
        let name = stage.scorer.as_deref().unwrap_or_default();
        // validate_config guarantees the binding exists with the right kind.
        let binding = self.registry.get(name).ok_or_else(|| ScoreError::backend(name, "unbound scorer"))?;
        match binding {
            ScorerBinding::Pointwise(s) => {
                let scores = scorer::score_pointwise(s.as_ref(), self.tokenizer, query, input)?;
                Ok((scores, n as u64))
            }
            ScorerBinding::Ensemble(members) => {
                let refs: Vec<&dyn PointwiseScorer> = members.iter().map(|m| m.as_ref()).collect();
                let scores = scorer::score_ensemble(&refs, self.tokenizer, query, input)?;
                Ok((scores, (n * members.len()) as u64))
            }
            // A single candidate has no opponents: it keeps its place unscored.
            ScorerBinding::Pairwise(_) if n == 1 => Ok((alloc::vec![0.0], 0)),
            ScorerBinding::Pairwise(s) => {
                let scores = scorer::score_pairwise_aggregate(s.as_ref(), self.tokenizer, query, input)?;
                Ok((scores, (n * (n - 1)) as u64))
            }
        }
    }
}

/// Last completed stage's full ordering, then each earlier re-ranking
/// stage's cut documents, latest stage first.
fn assemble_final(reports: &[StageReport]) -> RankedList {
    let completed: Vec<&StageReport> = reports.iter().filter(|r| r.error.is_none()).collect();
    let mut ids: Vec<&str> = Vec::new();
    if let Some((last, earlier)) = completed.split_last() {
        ids.extend(last.ranking.doc_ids());
        for report in earlier.iter().skip(1).rev() {
            ids.extend(report.ranking.doc_ids().skip(report.output_size));
        }
    }
    let len = ids.len();
    RankedList {
        entries: ids
            .into_iter()
            .enumerate()
            .map(|(rank, id)| ScoredDoc {
                doc_id: id.to_string(),
                score: (len - rank) as f64,
            })
            .collect(),
        provenance: CASCADE_PROVENANCE.into(),
    }
}
