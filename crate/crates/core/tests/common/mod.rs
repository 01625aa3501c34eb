//! Reference implementations used as test oracles. None of these touch the
//! index, the metric code or the aggregation code under test.

#![allow(dead_code)]

pub mod fixture;

use std::collections::HashMap;

use cascade_core::{tokenize, Bm25Params};
use rand::Rng;

/// Raw documents as (id, text), scored by a full scan for every query.
pub struct BruteBm25 {
    pub ids: Vec<String>,
    pub docs: Vec<Vec<String>>,
}

impl BruteBm25 {
    pub fn new(docs: &[(String, String)]) -> Self {
        BruteBm25 {
            ids: docs.iter().map(|(id, _)| id.clone()).collect(),
            docs: docs.iter().map(|(_, t)| tokenize(t)).collect(),
        }
    }

    pub fn score(&self, params: &Bm25Params, query: &[String], d: usize) -> f64 {
        let stats = self.stats(query);
        self.score_with(params, query, &stats, d)
    }

    /// Average length and per-query-term document frequency, by full scan.
    fn stats(&self, query: &[String]) -> (f64, HashMap<String, f64>) {
        let avg = self.docs.iter().map(Vec::len).sum::<usize>() as f64 / self.docs.len() as f64;
        let df = query
            .iter()
            .map(|term| {
                let df = self.docs.iter().filter(|doc| doc.contains(term)).count() as f64;
                (term.clone(), df)
            })
            .collect();
        (avg, df)
    }

    fn score_with(&self, params: &Bm25Params, query: &[String], stats: &(f64, HashMap<String, f64>), d: usize) -> f64 {
        let n = self.docs.len() as f64;
        let (avg, dfs) = stats;
        let len = self.docs[d].len() as f64;
        let mut s = 0.0;
        for term in query {
            let tf = self.docs[d].iter().filter(|t| *t == term).count() as f64;
            if tf == 0.0 {
                continue;
            }
            let df = dfs[term];
            let idf = (1.0 + (n - df + 0.5) / (df + 0.5)).ln();
            s += idf * tf / (tf + params.k1 * (1.0 - params.b + params.b * len / avg));
        }
        s
    }

    /// Full scan, full sort, then cut to k.
    pub fn topk(&self, params: &Bm25Params, query: &[String], k: usize) -> Vec<(String, f64)> {
        let stats = self.stats(query);
        let mut all: Vec<(String, f64)> = (0..self.docs.len())
            .map(|d| (self.ids[d].clone(), self.score_with(params, query, &stats, d)))
            .filter(|(_, s)| *s > 0.0)
            .collect();
        all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        all.truncate(k);
        all
    }
}

/// NDCG@k by building the ideal ranking explicitly and sorting it.
pub fn brute_ndcg(ranking: &[String], grades: &HashMap<String, u32>, k: usize) -> f64 {
    let dcg = |gs: &[u32]| -> f64 {
        gs.iter()
            .take(k)
            .enumerate()
            .map(|(i, &g)| (2f64.powi(g as i32) - 1.0) / ((i + 2) as f64).log2())
            .sum()
    };
    let mut ideal_docs: Vec<(&String, u32)> = grades.iter().map(|(d, &g)| (d, g)).collect();
    ideal_docs.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let ideal: Vec<u32> = ideal_docs.iter().map(|(_, g)| *g).collect();
    let idcg = dcg(&ideal);
    if idcg == 0.0 {
        return 0.0;
    }
    let got: Vec<u32> = ranking.iter().map(|d| grades.get(d).copied().unwrap_or(0)).collect();
    dcg(&got) / idcg
}

/// Random corpus over a small vocabulary so terms collide often.
pub fn random_corpus(rng: &mut impl Rng, n_docs: usize, vocab: usize) -> Vec<(String, String)> {
    (0..n_docs)
        .map(|i| {
            let len = rng.gen_range(1..30);
            let words: Vec<String> = (0..len).map(|_| format!("w{}", rng.gen_range(0..vocab))).collect();
            // Shuffled id order so tie-breaking is exercised against ingest order.
            (format!("d{:04}", (i * 7919) % 10_000), words.join(" "))
        })
        .collect()
}

pub fn random_query(rng: &mut impl Rng, vocab: usize) -> Vec<String> {
    let len = rng.gen_range(1..5);
    (0..len).map(|_| format!("w{}", rng.gen_range(0..vocab + 3))).collect()
}
