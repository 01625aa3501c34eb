//! Retrieval quality and cost measurement.

mod bench;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write as _;
use core::time::Duration;

use sha2::{Digest, Sha256};

use crate::corpus::{Qrels, QuerySet};
use crate::pipeline::{Cascade, CascadeError, CascadeResult, PipelineConfig};

pub use bench::{gen_benchmark, BenchmarkParams, BenchmarkError, SyntheticBenchmark};

/// NDCG@k with gain `2^rel - 1` and discount `log2(rank + 1)`.
///
/// The ideal ordering is taken from all judgments of the query, not only
/// the ranked documents. Returns 0 when the query has no positively graded
/// judgment. Ranked ids are assumed unique.
pub fn ndcg_at_k<'a>(ranking: impl IntoIterator<Item = &'a str>, qrels: &Qrels, query_id: &str, k: usize) -> f64 {
    let Some(judged) = qrels.for_query(query_id) else {
        return 0.0;
    };
    let mut ideal: Vec<u32> = judged.values().copied().filter(|&g| g > 0).collect();
    if ideal.is_empty() || k == 0 {
        return 0.0;
    }
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg(ideal.iter().copied().take(k));
    let got = dcg(ranking
        .into_iter()
        .take(k)
        .map(|id| judged.get(id).copied().unwrap_or(0)));
    got / idcg
}

fn gain(grade: u32) -> f64 {
    libm::exp2(f64::from(grade)) - 1.0
}

fn dcg(grades: impl Iterator<Item = u32>) -> f64 {
    grades
        .enumerate()
        .map(|(i, g)| gain(g) / libm::log2(i as f64 + 2.0))
        .sum()
}

/// Aggregate accuracy and cost of a cascade config over a query set.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub k: usize,
    pub per_query_ndcg: BTreeMap<String, f64>,
    pub mean_ndcg: f64,
    /// Mean wall time per query, warmup excluded.
    pub mean_search_time: Duration,
    /// Mean model inferences per query, one entry per stage.
    pub mean_scorer_calls_per_stage: Vec<f64>,
    /// Digest of the config that produced the report.
    pub config_digest: String,
    /// Queries skipped because they have no positively graded judgment.
    pub excluded_queries: Vec<String>,
}

impl EvalReport {
    pub fn evaluated_queries(&self) -> usize {
        self.per_query_ndcg.len()
    }

    pub fn mean_scorer_calls(&self) -> f64 {
        self.mean_scorer_calls_per_stage.iter().sum()
    }

    /// Digest over every field except timing, so reruns of a deterministic
    /// config produce the same value.
    pub fn digest(&self) -> String {
        let mut text = alloc::format!("k={};config={}\n", self.k, self.config_digest);
        for (q, v) in &self.per_query_ndcg {
            let _ = writeln!(text, "{q}\t{:016x}", v.to_bits());
        }
        let _ = writeln!(text, "mean\t{:016x}", self.mean_ndcg.to_bits());
        for c in &self.mean_scorer_calls_per_stage {
            let _ = writeln!(text, "calls\t{:016x}", c.to_bits());
        }
        for q in &self.excluded_queries {
            let _ = writeln!(text, "excluded\t{q}");
        }
        hex_sha256(text.as_bytes())
    }
}

pub fn config_digest(config: &PipelineConfig) -> String {
    hex_sha256(config.canonical().as_bytes())
}

fn hex_sha256(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest.iter() {
        let _ = write!(out, "{b:02x}");
    }
    out
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error(transparent)]
    Cascade(#[from] CascadeError),
    #[error("a2={a2} exceeds a1={a1}")]
    CutoffAboveA1 { a2: usize, a1: usize },
    #[error("the a2 sweep needs a config with at least 3 stages")]
    SweepNeedsThreeStages,
    #[error("k must be at least 1")]
    ZeroK,
}

/// Per-query outcome as seen by the aggregator.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryOutcome {
    pub query_id: String,
    pub ndcg: f64,
    pub elapsed: Duration,
    pub scorer_calls_per_stage: Vec<u64>,
}

impl QueryOutcome {
    pub fn from_result(result: &CascadeResult, qrels: &Qrels, k: usize) -> Self {
        QueryOutcome {
            query_id: result.query_id.clone(),
            ndcg: ndcg_at_k(result.final_ranking.doc_ids(), qrels, &result.query_id, k),
            elapsed: result.elapsed,
            scorer_calls_per_stage: result.stages.iter().map(|s| s.scorer_calls).collect(),
        }
    }
}

/// Queries that take part in evaluation (those with a positive judgment),
/// and the ones excluded.
pub fn judged_queries<'a>(queries: &'a QuerySet, qrels: &Qrels) -> (Vec<&'a crate::corpus::Query>, Vec<String>) {
    let mut judged = Vec::new();
    let mut excluded = Vec::new();
    for q in queries.iter() {
        if qrels.has_relevant(&q.id) {
            judged.push(q);
        } else {
            excluded.push(q.id.clone());
        }
    }
    (judged, excluded)
}

/// Folds per-query outcomes into a report. The result does not depend on
/// the order of `outcomes`.
pub fn aggregate(
    config: &PipelineConfig,
    k: usize,
    mut outcomes: Vec<QueryOutcome>,
    excluded_queries: Vec<String>,
) -> EvalReport {
    outcomes.sort_by(|a, b| a.query_id.cmp(&b.query_id));
    let n = outcomes.len();
    let stages = config.stages.len();
    let mut calls = alloc::vec![0u64; stages];
    let mut total_time = Duration::ZERO;
    let mut ndcg_sum = 0.0;
    let mut per_query_ndcg = BTreeMap::new();
    for o in &outcomes {
        ndcg_sum += o.ndcg;
        total_time += o.elapsed;
        for (acc, c) in calls.iter_mut().zip(&o.scorer_calls_per_stage) {
            *acc += c;
        }
        per_query_ndcg.insert(o.query_id.clone(), o.ndcg);
    }
    let denom = n.max(1) as f64;
    EvalReport {
        k,
        per_query_ndcg,
        mean_ndcg: if n == 0 { 0.0 } else { ndcg_sum / n as f64 },
        mean_search_time: if n == 0 { Duration::ZERO } else { total_time / n as u32 },
        mean_scorer_calls_per_stage: calls.into_iter().map(|c| c as f64 / denom).collect(),
        config_digest: config_digest(config),
        excluded_queries,
    }
}

/// Runs the cascade over every judged query and aggregates NDCG@k, mean
/// search time and per-stage inference counts.
///
/// The first judged query is run once as an untimed warmup before
/// measurement starts.
pub fn evaluate(cascade: &Cascade<'_>, queries: &QuerySet, qrels: &Qrels, k: usize) -> Result<EvalReport, EvalError> {
    if k == 0 {
        return Err(EvalError::ZeroK);
    }
    let (judged, excluded) = judged_queries(queries, qrels);
    if let Some(first) = judged.first() {
        cascade.run(first)?;
    }
    let outcomes = judged
        .iter()
        .map(|q| cascade.run(q).map(|r| QueryOutcome::from_result(&r, qrels, k)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(aggregate(cascade.config(), k, outcomes, excluded))
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SweepPoint {
    pub a2: usize,
    pub mean_ndcg: f64,
    pub mean_search_time: Duration,
    /// Mean inferences per query across all stages.
    pub mean_scorer_calls: f64,
}

/// The config evaluated at one sweep value: stage 1's cutoff becomes `a2`
/// and every later cutoff is capped at `a2`.
pub fn config_for_a2(template: &PipelineConfig, a2: usize) -> Result<PipelineConfig, EvalError> {
    if template.stages.len() < 3 {
        return Err(EvalError::SweepNeedsThreeStages);
    }
    let a1 = template.stages[0].cutoff;
    if a2 > a1 {
        return Err(EvalError::CutoffAboveA1 { a2, a1 });
    }
    let mut config = template.clone();
    config.stages[1].cutoff = a2;
    for stage in &mut config.stages[2..] {
        stage.cutoff = stage.cutoff.min(a2);
    }
    Ok(config)
}

/// Distinct sweep values in first-seen order.
pub fn distinct_a2(values: &[usize]) -> Vec<usize> {
    let mut seen = Vec::new();
    for &v in values {
        if !seen.contains(&v) {
            seen.push(v);
        }
    }
    seen
}

/// Evaluates `template` once per distinct `a2` value on the same queries.
pub fn sweep_a2(
    cascade: &Cascade<'_>,
    queries: &QuerySet,
    qrels: &Qrels,
    a2_values: &[usize],
    k: usize,
) -> Result<Vec<SweepPoint>, EvalError> {
    sweep_a2_with(cascade, a2_values, |c| evaluate(c, queries, qrels, k))
}

/// [`sweep_a2`] with a caller-supplied evaluator, e.g. a parallel one.
pub fn sweep_a2_with(
    cascade: &Cascade<'_>,
    a2_values: &[usize],
    mut eval: impl FnMut(&Cascade<'_>) -> Result<EvalReport, EvalError>,
) -> Result<Vec<SweepPoint>, EvalError> {
    let values = distinct_a2(a2_values);
    let configs = values
        .iter()
        .map(|&a2| config_for_a2(cascade.config(), a2))
        .collect::<Result<Vec<_>, _>>()?;
    values
        .into_iter()
        .zip(configs)
        .map(|(a2, config)| {
            let report = eval(&cascade.with_config(config)?)?;
            Ok(SweepPoint::from_report(a2, &report))
        })
        .collect()
}

impl SweepPoint {
    pub fn from_report(a2: usize, report: &EvalReport) -> Self {
        SweepPoint {
            a2,
            mean_ndcg: report.mean_ndcg,
            mean_search_time: report.mean_search_time,
            mean_scorer_calls: report.mean_scorer_calls(),
        }
    }
}

/// `a2,mean_ndcg,mean_search_time_ms,mean_scorer_calls` with a header row.
pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut out = String::from("a2,mean_ndcg,mean_search_time_ms,mean_scorer_calls\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            p.a2,
            p.mean_ndcg,
            p.mean_search_time.as_secs_f64() * 1e3,
            p.mean_scorer_calls
        );
    }
    out
}
