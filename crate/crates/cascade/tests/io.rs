use std::path::Path;

use cascade::error::Error;
use cascade::io::*;
use cascade_core::{Corpus, Document, Qrels, Query, QuerySet};
use proptest::prelude::*;

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn corpus_line_becomes_a_document() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "c.jsonl", "{\"_id\":\"d1\",\"title\":\"\",\"text\":\"hello world\"}\n\n{\"_id\":\"d2\",\"text\":\"no title\"}\n");
    let c = load_corpus(&p).unwrap();
    assert_eq!(c.len(), 2);
    assert_eq!(c.get("d1").unwrap().token_count, 2);
    assert_eq!(c.get("d2").unwrap().title, "");
}

#[test]
fn duplicate_id_names_the_id_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "c.jsonl", "{\"_id\":\"d1\",\"text\":\"a\"}\n{\"_id\":\"d1\",\"text\":\"b\"}\n");
    let err = load_corpus(&p).unwrap_err();
    assert!(matches!(err, Error::Data(_)));
    let msg = err.to_string();
    assert!(msg.contains(":2:") && msg.contains("\"d1\""), "{msg}");
}

#[test]
fn malformed_and_incomplete_lines_report_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "c.jsonl", "{\"_id\":\"d1\",\"text\":\"a\"}\n{not json\n");
    assert!(load_corpus(&p).unwrap_err().to_string().contains(":2:"));
    let p = write(dir.path(), "c2.jsonl", "{\"_id\":\"d1\"}\n");
    let msg = load_corpus(&p).unwrap_err().to_string();
    assert!(msg.contains(":1:") && msg.contains("text"), "{msg}");
    let p = write(dir.path(), "q.jsonl", "{\"text\":\"x\"}\n");
    assert!(load_queries(&p).unwrap_err().to_string().contains("_id"));
    let err = load_corpus(&dir.path().join("missing.jsonl")).unwrap_err();
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn qrels_rows_grades_and_header() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "q.tsv", "query-id\tcorpus-id\tscore\nq1\td7\t1\nq1\td8\t0\nq2\td1\t2\n");
    let (q, warnings) = load_qrels(&p).unwrap();
    assert!(warnings.is_empty());
    assert_eq!(q.grade("q1", "d7"), Some(1));
    assert_eq!(q.grade("q1", "d8"), Some(0));
    assert_eq!(q.grade("q2", "d1"), Some(2));

    let p = write(dir.path(), "h.tsv", "query-id\tcorpus-id\tscore\n");
    assert!(load_qrels(&p).unwrap().0.is_empty());
}

#[test]
fn repeated_qrels_pair_keeps_last_grade_and_warns() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(dir.path(), "q.tsv", "query-id\tcorpus-id\tscore\nq1\td1\t1\nq1\td1\t2\n");
    let (q, warnings) = load_qrels(&p).unwrap();
    assert_eq!(q.grade("q1", "d1"), Some(2));
    assert_eq!(warnings.len(), 1);
    assert!(warnings[0].contains(":3:"));
}

#[test]
fn non_integer_grade_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    for bad in ["1.5", "-1", "high"] {
        let p = write(dir.path(), "q.tsv", &format!("query-id\tcorpus-id\tscore\nq1\td1\t{bad}\n"));
        let msg = load_qrels(&p).unwrap_err().to_string();
        assert!(msg.contains(":2:") && msg.contains(bad), "{msg}");
    }
    let p = write(dir.path(), "q.tsv", "query-id\tcorpus-id\tscore\nq1 d1 1\n");
    assert!(load_qrels(&p).unwrap_err().to_string().contains("3 tab-separated"));
}

fn text() -> impl Strategy<Value = String> {
    // Quotes, backslashes, unicode and control characters all need escaping.
    prop::string::string_regex("[a-zA-Z0-9 \"\\\\é漢\t\n.,-]{0,40}").unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn corpus_round_trips(docs in prop::collection::vec((text(), text()), 1..20)) {
        let dir = tempfile::tempdir().unwrap();
        let corpus = Corpus::from_documents(
            docs.iter().enumerate().map(|(i, (t, b))| Document::new(format!("d{i}"), t.clone(), b.clone())),
        ).unwrap();
        let p = dir.path().join("c.jsonl");
        write_corpus(&p, &corpus).unwrap();
        let back = load_corpus(&p).unwrap();
        prop_assert_eq!(back.documents(), corpus.documents());
    }

    #[test]
    fn queries_round_trip(texts in prop::collection::vec(text(), 1..20)) {
        let dir = tempfile::tempdir().unwrap();
        let qs = QuerySet::from_queries(texts.iter().enumerate().map(|(i, t)| Query::new(format!("q{i}"), t.clone()))).unwrap();
        let p = dir.path().join("q.jsonl");
        write_queries(&p, &qs).unwrap();
        let back = load_queries(&p).unwrap();
        prop_assert_eq!(back.queries(), qs.queries());
    }

    #[test]
    fn qrels_round_trip(rows in prop::collection::vec((0u8..5, 0u8..20, 0u32..4), 0..40)) {
        let dir = tempfile::tempdir().unwrap();
        let mut qrels = Qrels::new();
        for (q, d, g) in rows {
            qrels.insert(format!("q{q}"), format!("d{d}"), g);
        }
        let p = dir.path().join("q.tsv");
        write_qrels(&p, &qrels).unwrap();
        let (back, warnings) = load_qrels(&p).unwrap();
        prop_assert!(warnings.is_empty());
        prop_assert_eq!(back, qrels);
    }
}
