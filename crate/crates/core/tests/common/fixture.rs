//! The seeded synthetic benchmark wired to a scorer registry.

use std::sync::Arc;

use cascade_core::eval::{BenchmarkParams, SyntheticBenchmark};
use cascade_core::scorer::Counting;
use cascade_core::*;

pub const LM_QUALITY: f64 = 0.6;
pub const STRONG_QUALITY: f64 = 0.9;

pub struct Fixture {
    pub bench: SyntheticBenchmark,
    pub index: InvertedIndex,
    pub registry: ScorerRegistry,
    pub lm: Arc<Counting<SyntheticScorer>>,
    pub strong: Arc<Counting<SyntheticScorer>>,
    pub members: Vec<Arc<Counting<SyntheticScorer>>>,
    pub pair: Arc<Counting<SyntheticScorer>>,
}

impl Fixture {
    pub fn new(params: &BenchmarkParams) -> Self {
        let bench = gen_benchmark(params).unwrap();
        let index = InvertedIndex::build(&bench.corpus, &SimpleTokenizer).unwrap();
        let oracle = Arc::new(bench.qrels.clone());
        let synth = |name: &str, q: f64, seed: u64| {
            Arc::new(Counting::new(SyntheticScorer::new(name, q, seed, oracle.clone()).unwrap()))
        };
        let lm = synth("lm", LM_QUALITY, 11);
        let strong = synth("strong", STRONG_QUALITY, 12);
        let members: Vec<_> = (0..3).map(|i| synth("member", LM_QUALITY, 20 + i)).collect();
        let pair = synth("pair", STRONG_QUALITY, 13);

        let mut registry = ScorerRegistry::new();
        registry
            .pointwise("lm", lm.clone())
            .pointwise("lm-twin", synth("lm", LM_QUALITY, 11))
            .pointwise("strong", strong.clone())
            .ensemble("ens", members.iter().map(|m| m.clone() as Arc<dyn PointwiseScorer>).collect())
            .pairwise("pair", pair.clone());
        Fixture {
            bench,
            index,
            registry,
            lm,
            strong,
            members,
            pair,
        }
    }

    pub fn cascade(&self, config: PipelineConfig) -> Cascade<'_> {
        Cascade::new(
            config,
            &self.index,
            &self.bench.corpus,
            &SimpleTokenizer,
            &self.registry,
            &FrozenClock,
        )
        .unwrap()
    }

    pub fn reset_counts(&self) {
        for c in [&self.lm, &self.strong, &self.pair].into_iter().chain(&self.members) {
            c.reset();
        }
    }
}

pub fn bm25_only(a1: usize) -> PipelineConfig {
    PipelineConfig::new(vec![StageSpec::bm25(a1)])
}

pub fn two_stage(a1: usize, a2: usize) -> PipelineConfig {
    PipelineConfig::new(vec![StageSpec::bm25(a1), StageSpec::rerank(StageKind::Pointwise, "lm", a2)])
}

pub fn three_stage(a1: usize, a2: usize, kind: StageKind, scorer: &str) -> PipelineConfig {
    PipelineConfig::new(vec![
        StageSpec::bm25(a1),
        StageSpec::rerank(StageKind::Pointwise, "lm", a2),
        StageSpec::rerank(kind, scorer, a2),
    ])
}
