//! TREC run files, JSON reports and the plain-text summary table.

use std::fmt::Write as _;

use cascade_core::{CascadeResult, EvalReport, SweepPoint};
use serde::Serialize;

/// `query_id Q0 doc_id rank score tag`, tab-separated, ranks from 1.
pub fn trec_lines(result: &CascadeResult, tag: &str) -> String {
    let mut out = String::new();
    for (i, d) in result.final_ranking.entries.iter().enumerate() {
        let _ = writeln!(out, "{}\tQ0\t{}\t{}\t{}\t{tag}", result.query_id, d.doc_id, i + 1, d.score);
    }
    out
}

#[derive(Debug, Serialize)]
pub struct ReportJson<'a> {
    pub k: usize,
    pub mean_ndcg: f64,
    pub evaluated_queries: usize,
    pub excluded_queries: &'a [String],
    pub mean_search_time_ms: f64,
    pub mean_scorer_calls: f64,
    pub mean_scorer_calls_per_stage: Vec<StageCalls<'a>>,
    pub per_query_ndcg: &'a std::collections::BTreeMap<String, f64>,
    pub config_digest: &'a str,
    /// Digest of every field above except timing.
    pub report_digest: String,
}

#[derive(Debug, Serialize)]
pub struct StageCalls<'a> {
    pub stage: &'a str,
    pub mean_calls: f64,
}

pub fn report_json(report: &EvalReport, stage_labels: &[&str]) -> String {
    let json = ReportJson {
        k: report.k,
        mean_ndcg: report.mean_ndcg,
        evaluated_queries: report.evaluated_queries(),
        excluded_queries: &report.excluded_queries,
        mean_search_time_ms: report.mean_search_time.as_secs_f64() * 1e3,
        mean_scorer_calls: report.mean_scorer_calls(),
        mean_scorer_calls_per_stage: stage_labels
            .iter()
            .zip(&report.mean_scorer_calls_per_stage)
            .map(|(stage, &mean_calls)| StageCalls { stage, mean_calls })
            .collect(),
        per_query_ndcg: &report.per_query_ndcg,
        config_digest: &report.config_digest,
        report_digest: report.digest(),
    };
    serde_json::to_string_pretty(&json).expect("report serializes") + "\n"
}

pub fn report_table(report: &EvalReport, stage_labels: &[&str]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NDCG@{:<6} {:.4}", report.k, report.mean_ndcg);
    let _ = writeln!(
        out,
        "queries      {} evaluated, {} excluded",
        report.evaluated_queries(),
        report.excluded_queries.len()
    );
    let _ = writeln!(out, "time/query   {:.3} ms", report.mean_search_time.as_secs_f64() * 1e3);
    let _ = writeln!(out, "calls/query  {:.1}", report.mean_scorer_calls());
    for (i, (label, calls)) in stage_labels.iter().zip(&report.mean_scorer_calls_per_stage).enumerate() {
        let _ = writeln!(out, "  stage {i} {label:<12} {calls:.1}");
    }
    out
}

pub fn search_table(result: &CascadeResult, topk: usize) -> String {
    let mut out = String::new();
    for (i, d) in result.final_ranking.entries.iter().take(topk).enumerate() {
        let _ = writeln!(out, "{:>4}  {}  {}", i + 1, d.doc_id, d.score);
    }
    let _ = writeln!(out, "--");
    for (i, s) in result.stages.iter().enumerate() {
        let _ = write!(
            out,
            "stage {i} {} ({}): in {} out {} calls {} {:.3} ms",
            s.name,
            s.kind,
            s.input_size,
            s.output_size,
            s.scorer_calls,
            s.elapsed.as_secs_f64() * 1e3
        );
        if let Some(e) = &s.error {
            let _ = write!(out, " FAILED: {e}");
        }
        out.push('\n');
    }
    out
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    cascade_core::eval::sweep_csv(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use cascade_core::{RankedList, ScoredDoc};
    use std::time::Duration;

    #[test]
    fn trec_format() {
        let r = CascadeResult {
            query_id: "q1".into(),
            final_ranking: RankedList {
                entries: vec![
                    ScoredDoc {
                        doc_id: "d2".into(),
                        score: 2.0,
                    },
                    ScoredDoc {
                        doc_id: "d1".into(),
                        score: 1.0,
                    },
                ],
                provenance: "cascade".into(),
            },
            stages: vec![],
            elapsed: Duration::ZERO,
        };
        assert_eq!(trec_lines(&r, "run"), "q1\tQ0\td2\t1\t2\trun\nq1\tQ0\td1\t2\t1\trun\n");
    }
}
