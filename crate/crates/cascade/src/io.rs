//! BEIR-style corpus, query and qrels files.
//!
//! `corpus.jsonl` lines carry `_id`, `text` and an optional `title`;
//! `queries.jsonl` lines carry `_id` and `text`. Qrels are tab-separated
//! with a `query-id corpus-id score` header and integer grades.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use cascade_core::{Corpus, Document, Qrels, Query, QuerySet};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Deserialize)]
struct CorpusLine {
    #[serde(rename = "_id")]
    id: String,
    #[serde(default)]
    title: String,
    text: String,
}

#[derive(Serialize)]
struct CorpusLineOut<'a> {
    #[serde(rename = "_id")]
    id: &'a str,
    title: &'a str,
    text: &'a str,
}

#[derive(Deserialize)]
struct QueryLine {
    #[serde(rename = "_id")]
    id: String,
    text: String,
}

#[derive(Serialize)]
struct QueryLineOut<'a> {
    #[serde(rename = "_id")]
    id: &'a str,
    text: &'a str,
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn data_err(path: &Path, line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Data(format!("{}:{line}: {msg}", path.display()))
}

/// Calls `f` with (1-based line number, line) for each non-blank line.
fn for_each_line(path: &Path, mut f: impl FnMut(usize, &str) -> Result<()>) -> Result<()> {
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        f(i + 1, &line)?;
    }
    Ok(())
}

pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let mut corpus = Corpus::new();
    for_each_line(path, |n, line| {
        let rec: CorpusLine = serde_json::from_str(line).map_err(|e| data_err(path, n, e))?;
        corpus
            .push(Document::new(rec.id, rec.title, rec.text))
            .map_err(|e| data_err(path, n, e))
    })?;
    Ok(corpus)
}

pub fn write_corpus(path: &Path, corpus: &Corpus) -> Result<()> {
    let mut w = create(path)?;
    for d in corpus {
        let line = CorpusLineOut {
            id: &d.id,
            title: &d.title,
            text: &d.body,
        };
        serde_json::to_writer(&mut w, &line).map_err(|e| Error::Data(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_queries(path: &Path) -> Result<QuerySet> {
    let mut queries = QuerySet::new();
    for_each_line(path, |n, line| {
        let rec: QueryLine = serde_json::from_str(line).map_err(|e| data_err(path, n, e))?;
        queries.push(Query::new(rec.id, rec.text)).map_err(|e| data_err(path, n, e))
    })?;
    Ok(queries)
}

pub fn write_queries(path: &Path, queries: &QuerySet) -> Result<()> {
    let mut w = create(path)?;
    for q in queries.iter() {
        serde_json::to_writer(&mut w, &QueryLineOut { id: &q.id, text: &q.text })
            .map_err(|e| Error::Data(e.to_string()))?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub const QRELS_HEADER: &str = "query-id\tcorpus-id\tscore";

/// Loads TSV qrels. Returns the judgments and one warning per repeated
/// (query, document) pair; the last grade seen wins.
pub fn load_qrels(path: &Path) -> Result<(Qrels, Vec<String>)> {
    let mut qrels = Qrels::new();
    let mut warnings = Vec::new();
    let mut saw_header = false;
    for_each_line(path, |n, line| {
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if !saw_header {
            saw_header = true;
            if fields == ["query-id", "corpus-id", "score"] {
                return Ok(());
            }
        }
        let [q, d, grade] = fields[..] else {
            return Err(data_err(path, n, format!("expected 3 tab-separated fields, got {}", fields.len())));
        };
        if q.is_empty() || d.is_empty() {
            return Err(data_err(path, n, "empty query or corpus id"));
        }
        let grade: u32 = grade
            .parse()
            .map_err(|_| data_err(path, n, format!("grade {grade:?} is not a non-negative integer")))?;
        if let Some(prev) = qrels.insert(q, d, grade) {
            warnings.push(format!(
                "{}:{n}: repeated judgment ({q}, {d}); grade {prev} replaced by {grade}",
                path.display()
            ));
        }
        Ok(())
    })?;
    Ok((qrels, warnings))
}

pub fn write_qrels(path: &Path, qrels: &Qrels) -> Result<()> {
    let mut w = create(path)?;
    let mut out = String::from(QRELS_HEADER);
    out.push('\n');
    for (q, d, g) in qrels.iter() {
        out.push_str(&format!("{q}\t{d}\t{g}\n"));
    }
    w.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}
