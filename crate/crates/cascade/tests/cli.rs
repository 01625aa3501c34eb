mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cascade::protocol::Mode;
use common::{honest, Stub};

fn cascade(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cascade"))
        .args(args)
        .env_remove(cascade::config::ENDPOINT_ENV)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A small generated benchmark with its index built.
struct Workspace {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

impl Workspace {
    fn new() -> Self {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        let o = cascade(&["gen-benchmark", "--out-dir", s(&root), "--n-docs", "200", "--n-queries", "8"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let o = cascade(&["index", "--corpus", s(&root.join("corpus.jsonl")), "--out", s(&root.join("index.bin"))]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        Workspace { _dir: dir, root }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn write(&self, name: &str, text: &str) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    fn eval_args(&self, config: &Path) -> Vec<String> {
        [
            "--index",
            s(&self.path("index.bin")),
            "--config",
            s(config),
            "--queries",
            s(&self.path("queries.jsonl")),
            "--qrels",
            s(&self.path("qrels/test.tsv")),
        ]
        .map(String::from)
        .to_vec()
    }
}

fn run_with(cmd: &str, base: Vec<String>, extra: &[&str]) -> Output {
    let mut args = vec![cmd.to_string()];
    args.extend(base);
    args.extend(extra.iter().map(|s| s.to_string()));
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    cascade(&refs)
}

#[test]
fn index_prints_stats_and_rebuilds_byte_identically() {
    let ws = Workspace::new();
    let again = ws.path("again.bin");
    let o = cascade(&["index", "--corpus", s(&ws.path("corpus.jsonl")), "--out", s(&again)]);
    assert_eq!(code(&o), 0);
    let out = stdout(&o);
    assert!(out.contains("doc_count       200") && out.contains("vocabulary_size") && out.contains("avg_doc_length"));
    assert_eq!(std::fs::read(ws.path("index.bin")).unwrap(), std::fs::read(again).unwrap());
}

#[test]
fn index_bad_line_exits_1_naming_the_line() {
    let ws = Workspace::new();
    let bad = ws.write("bad.jsonl", "{\"_id\":\"a\",\"text\":\"x\"}\n{\"_id\":\"b\",\"text\":\"y\"}\n{\"_id\":\"c\"\n");
    let o = cascade(&["index", "--corpus", s(&bad), "--out", s(&ws.path("x.bin"))]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("bad.jsonl:3:"), "{}", stderr(&o));
}

#[test]
fn bm25_only_search_finds_the_matching_doc() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.jsonl");
    std::fs::write(
        &corpus,
        "{\"_id\":\"d1\",\"text\":\"apples and pears\"}\n{\"_id\":\"d2\",\"text\":\"zebra crossing\"}\n{\"_id\":\"d3\",\"text\":\"pears only\"}\n",
    )
    .unwrap();
    let idx = dir.path().join("i.bin");
    assert_eq!(code(&cascade(&["index", "--corpus", s(&corpus), "--out", s(&idx)])), 0);
    let cfg = dir.path().join("p.toml");
    std::fs::write(&cfg, "[[stages]]\nkind = \"bm25\"\ncutoff = 10\n").unwrap();
    let o = cascade(&["search", "--index", s(&idx), "--config", s(&cfg), "--query", "zebra"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let first = stdout(&o).lines().next().unwrap().to_string();
    assert!(first.trim_start().starts_with("1  d2"), "{first}");
}

#[test]
fn search_topk_and_telemetry() {
    let ws = Workspace::new();
    let o = cascade(&[
        "search",
        "--index",
        s(&ws.path("index.bin")),
        "--config",
        s(&ws.path("pipeline.toml")),
        "--query",
        "t00001 t00002 t00003",
        "--topk",
        "10",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    let (results, telemetry) = out.split_once("--\n").unwrap();
    assert!(results.lines().count() <= 10);
    assert_eq!(telemetry.lines().count(), 3);
    assert!(telemetry.contains("stage 1 lm (pointwise): in "));
}

#[test]
fn invalid_cutoff_order_exits_2() {
    let ws = Workspace::new();
    let cfg = ws.write(
        "bad.toml",
        "corpus = \"corpus.jsonl\"\n[[stages]]\nkind = \"bm25\"\ncutoff = 100\n[[stages]]\nkind = \"pointwise\"\nscorer = \"lm\"\ncutoff = 200\n[scorers.lm]\ntype = \"synthetic\"\nquality = 0.5\nqrels = \"qrels/test.tsv\"\n",
    );
    let o = cascade(&["search", "--index", s(&ws.path("index.bin")), "--config", s(&cfg), "--query", "x"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("cutoff non-increasing"), "{}", stderr(&o));
}

#[test]
fn evaluate_defaults_to_k10_and_is_reproducible() {
    let ws = Workspace::new();
    let cfg = ws.path("pipeline.toml");
    let (a, b) = (ws.path("a.json"), ws.path("b.json"));
    for (out, workers) in [(&a, "1"), (&b, "3")] {
        let o = run_with("evaluate", ws.eval_args(&cfg), &["--out", s(out), "--workers", workers]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert!(stdout(&o).contains("NDCG@10"));
    }
    let parse = |p: &Path| -> serde_json::Value { serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap() };
    let (mut ja, mut jb) = (parse(&a), parse(&b));
    assert_eq!(ja["k"], 10);
    assert_eq!(ja["report_digest"], jb["report_digest"]);
    for j in [&mut ja, &mut jb] {
        j.as_object_mut().unwrap().remove("mean_search_time_ms");
    }
    assert_eq!(ja, jb);
}

#[test]
fn evaluate_writes_a_trec_run() {
    let ws = Workspace::new();
    let run = ws.path("run.txt");
    let o = run_with("evaluate", ws.eval_args(&ws.path("pipeline.toml")), &["--run", s(&run), "--tag", "t1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(run).unwrap();
    let first: Vec<&str> = text.lines().next().unwrap().split('\t').collect();
    assert_eq!(first.len(), 6);
    assert_eq!((first[1], first[3], first[5]), ("Q0", "1", "t1"));
}

#[test]
fn sweep_writes_one_row_per_value() {
    let ws = Workspace::new();
    let csv = ws.path("s.csv");
    let o = run_with("sweep", ws.eval_args(&ws.path("pipeline.toml")), &["--a2-values", "0,10,20", "--out", s(&csv)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "a2,mean_ndcg,mean_search_time_ms,mean_scorer_calls");
    assert_eq!(lines.len(), 4);
    assert!(lines[1].starts_with("0,") && lines[3].starts_with("20,"));
}

#[test]
fn sweep_value_above_a1_is_a_config_error() {
    let ws = Workspace::new();
    let o = run_with("sweep", ws.eval_args(&ws.path("pipeline.toml")), &["--a2-values", "10,500", "--out", s(&ws.path("s.csv"))]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("a2=500"));
}

#[test]
fn unknown_flags_are_errors() {
    let o = cascade(&["index", "--corpus", "x", "--out", "y", "--frobnicate"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--frobnicate"));
}

#[test]
fn help_documents_every_flag() {
    for (sub, flags) in [
        ("index", &["--corpus", "--out", "--k1", "--b"][..]),
        ("search", &["--index", "--config", "--query", "--topk", "--corpus", "--fallback-on-error"]),
        ("evaluate", &["--queries", "--qrels", "--k", "--workers", "--out", "--run"]),
        ("sweep", &["--a2-values", "--out", "--workers"]),
        ("gen-benchmark", &["--out-dir", "--seed", "--n-docs", "--n-queries", "--vocab-size", "--relevance-per-query"]),
        ("serve-check", &["--endpoint", "--mode", "--timeout-secs", "CASCADE_SCORER_ENDPOINT"]),
    ] {
        let o = cascade(&[sub, "--help"]);
        assert_eq!(code(&o), 0);
        let help = stdout(&o);
        for f in flags {
            assert!(help.contains(f), "{sub} --help lacks {f}");
        }
    }
}

fn external_pipeline(ws: &Workspace, endpoint: Option<&str>) -> PathBuf {
    let endpoint = endpoint.map(|e| format!("endpoint = \"{e}\"\n")).unwrap_or_default();
    ws.write(
        "ext.toml",
        &format!(
            "corpus = \"corpus.jsonl\"\n[[stages]]\nkind = \"bm25\"\ncutoff = 30\n[[stages]]\nkind = \"pointwise\"\nscorer = \"ext\"\ncutoff = 10\n[scorers.ext]\ntype = \"external\"\n{endpoint}"
        ),
    )
}

#[test]
fn external_scorer_in_a_pipeline() {
    let ws = Workspace::new();
    let stub = Stub::spawn(honest(Mode::Pointwise));
    let cfg = external_pipeline(&ws, Some(&stub.endpoint));
    let o = run_with("evaluate", ws.eval_args(&cfg), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stub.requests() > 0);
}

#[test]
fn endpoint_falls_back_to_the_environment() {
    let ws = Workspace::new();
    let stub = Stub::spawn(honest(Mode::Pointwise));
    let cfg = external_pipeline(&ws, None);
    let o = run_with("evaluate", ws.eval_args(&cfg), &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("CASCADE_SCORER_ENDPOINT"));

    let mut args = vec!["evaluate".to_string()];
    args.extend(ws.eval_args(&cfg));
    let o = Command::new(env!("CARGO_BIN_EXE_cascade"))
        .args(&args)
        .env(cascade::config::ENDPOINT_ENV, &stub.endpoint)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn backend_failure_exits_3_unless_fallback() {
    let ws = Workspace::new();
    let stub = Stub::spawn(std::sync::Arc::new(|req| match req {
        cascade::protocol::Request::Hello { .. } => Some(common::hello_ok(Mode::Pointwise)),
        _ => Some(r#"{"type":"scores","id":0,"scores":[]}"#.into()),
    }));
    let cfg = external_pipeline(&ws, Some(&stub.endpoint));
    let o = run_with("evaluate", ws.eval_args(&cfg), &[]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    // The first failure poisons the connection; every later query falls back too.
    let o = run_with("evaluate", ws.eval_args(&cfg), &["--fallback-on-error"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn serve_check_exit_codes() {
    let stub = Stub::spawn(honest(Mode::Pairwise));
    let o = cascade(&["serve-check", "--endpoint", &stub.endpoint, "--mode", "pairwise"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("handshake ok") && stdout(&o).contains("round trip ok"));

    let o = cascade(&["serve-check", "--endpoint", &stub.endpoint, "--mode", "pointwise"]);
    assert_eq!(code(&o), 3);

    let o = cascade(&["serve-check", "--endpoint", "ftp://nope", "--mode", "pointwise"]);
    assert_eq!(code(&o), 2);

    let o = cascade(&["serve-check", "--mode", "sideways", "--endpoint", &stub.endpoint]);
    assert_eq!(code(&o), 2);
}

#[test]
fn re_ranking_without_corpus_is_a_config_error() {
    let ws = Workspace::new();
    let text = std::fs::read_to_string(ws.path("pipeline.toml")).unwrap().replace("corpus = \"corpus.jsonl\"\n", "");
    let cfg = ws.write("nocorpus.toml", &text);
    let o = run_with("evaluate", ws.eval_args(&cfg), &[]);
    assert_eq!(code(&o), 2);
    let o = run_with("evaluate", ws.eval_args(&cfg), &["--corpus", s(&ws.path("corpus.jsonl"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}
