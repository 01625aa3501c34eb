//! Evaluation across worker threads.

use std::time::{Duration, Instant};

use cascade_core::eval::{aggregate, judged_queries, sweep_a2_with, QueryOutcome};
use cascade_core::{Cascade, CascadeResult, Clock, EvalError, EvalReport, Qrels, Query, QuerySet, SweepPoint};

/// Wall clock measured from process-local start.
#[derive(Debug, Clone, Copy)]
pub struct StdClock {
    origin: Instant,
}

impl Default for StdClock {
    fn default() -> Self {
        StdClock { origin: Instant::now() }
    }
}

impl Clock for StdClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }
}

/// Runs `queries` over `workers` threads and returns results in input order.
pub fn run_all(cascade: &Cascade<'_>, queries: &[&Query], workers: usize) -> Result<Vec<CascadeResult>, cascade_core::CascadeError> {
    let workers = workers.clamp(1, queries.len().max(1));
    if workers == 1 {
        return queries.iter().map(|q| cascade.run(q)).collect();
    }
    let chunk = queries.len().div_ceil(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = queries
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|q| cascade.run(q)).collect::<Result<Vec<_>, _>>()))
            .collect();
        let mut out = Vec::with_capacity(queries.len());
        for h in handles {
            out.extend(h.join().expect("worker panicked")?);
        }
        Ok(out)
    })
}

/// Same result as `cascade_core::evaluate`, with queries spread over
/// `workers` threads. Timings are only comparable across runs with one
/// worker.
pub fn evaluate(cascade: &Cascade<'_>, queries: &QuerySet, qrels: &Qrels, k: usize, workers: usize) -> Result<EvalReport, EvalError> {
    if k == 0 {
        return Err(EvalError::ZeroK);
    }
    let (judged, excluded) = judged_queries(queries, qrels);
    if let Some(first) = judged.first() {
        cascade.run(first)?;
    }
    let outcomes = run_all(cascade, &judged, workers)?
        .iter()
        .map(|r| QueryOutcome::from_result(r, qrels, k))
        .collect();
    Ok(aggregate(cascade.config(), k, outcomes, excluded))
}

pub fn sweep(
    cascade: &Cascade<'_>,
    queries: &QuerySet,
    qrels: &Qrels,
    a2_values: &[usize],
    k: usize,
    workers: usize,
) -> Result<Vec<SweepPoint>, EvalError> {
    sweep_a2_with(cascade, a2_values, |c| evaluate(c, queries, qrels, k, workers))
}
