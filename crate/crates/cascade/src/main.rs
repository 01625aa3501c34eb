use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use cascade::config::{PipelineFile, ENDPOINT_ENV};
use cascade::error::{Error, Result};
use cascade::eval::{self, StdClock};
use cascade::external::{ClientOptions, Endpoint, ExternalScorer};
use cascade::protocol::Mode;
use cascade::{io, output, snapshot};
use cascade_core::eval::{BenchmarkParams, judged_queries};
use cascade_core::scorer::{score_pairwise_aggregate, score_pointwise};
use cascade_core::{
    gen_benchmark, Bm25Params, Cascade, Corpus, Document, FailurePolicy, InvertedIndex, Qrels, Query, QuerySet,
    SimpleTokenizer,
};
use clap::{Args, Parser, Subcommand};

/// Multi-stage re-ranking: BM25 retrieval followed by pointwise, ensemble
/// or pairwise re-rankers.
///
/// Exit codes: 0 success, 1 data error, 2 config or usage error, 3 scorer
/// backend error.
#[derive(Parser)]
#[command(name = "cascade", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a BM25 index from a corpus.jsonl and write a snapshot.
    Index {
        /// Corpus in JSON lines (`_id`, `title`, `text`).
        #[arg(long)]
        corpus: PathBuf,
        /// Snapshot file to write.
        #[arg(long)]
        out: PathBuf,
        /// BM25 term-frequency saturation.
        #[arg(long, default_value_t = 0.9)]
        k1: f64,
        /// BM25 length normalization.
        #[arg(long, default_value_t = 0.4)]
        b: f64,
    },
    /// Run one query through the cascade and print the ranking.
    Search {
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Query text.
        #[arg(long)]
        query: String,
        /// Query id, used by synthetic scorers to look up judgments.
        #[arg(long, default_value = "query")]
        query_id: String,
        /// Relevance judgments for synthetic scorers without their own.
        #[arg(long)]
        qrels: Option<PathBuf>,
        /// Number of results to print.
        #[arg(long, default_value_t = 10)]
        topk: usize,
    },
    /// Evaluate a pipeline over a query set and write an NDCG@k report.
    Evaluate {
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[command(flatten)]
        eval: EvalArgs,
        /// Report file (JSON). The table is printed either way.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the final rankings as a TREC run file.
        #[arg(long)]
        run: Option<PathBuf>,
        /// Run tag for the TREC run file.
        #[arg(long, default_value = "cascade")]
        tag: String,
    },
    /// Evaluate a 3+-stage pipeline at several a2 cutoffs and write a CSV.
    Sweep {
        #[command(flatten)]
        pipeline: PipelineArgs,
        #[command(flatten)]
        eval: EvalArgs,
        /// Comma-separated a2 values.
        #[arg(long, value_delimiter = ',', default_value = "0,10,20,30,40,50,60,70")]
        a2_values: Vec<usize>,
        /// CSV output (`a2,mean_ndcg,mean_search_time_ms,mean_scorer_calls`).
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a seeded synthetic benchmark (corpus, queries, qrels, pipeline).
    GenBenchmark {
        /// Output directory.
        #[arg(long)]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1000)]
        n_docs: usize,
        #[arg(long, default_value_t = 50)]
        n_queries: usize,
        #[arg(long, default_value_t = 5000)]
        vocab_size: usize,
        #[arg(long, default_value_t = 3)]
        relevance_per_query: usize,
    },
    /// Handshake with a scorer backend and run one scoring round trip.
    ServeCheck {
        /// `tcp://host:port` or `stdio:<command> [args...]`.
        #[arg(long, env = ENDPOINT_ENV)]
        endpoint: String,
        #[arg(long, default_value = "pointwise")]
        mode: Mode,
        /// Seconds to wait for each reply.
        #[arg(long, default_value_t = 30.0)]
        timeout_secs: f64,
    },
}

#[derive(Args)]
struct PipelineArgs {
    /// Index snapshot written by `cascade index`.
    #[arg(long)]
    index: PathBuf,
    /// Pipeline file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Corpus for re-ranking stages; overrides `corpus` in the pipeline file.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// On a scorer failure keep the earlier stages' ranking instead of
    /// failing the query.
    #[arg(long)]
    fallback_on_error: bool,
}

#[derive(Args)]
struct EvalArgs {
    /// Queries in JSON lines (`_id`, `text`).
    #[arg(long)]
    queries: PathBuf,
    /// Qrels TSV with a `query-id corpus-id score` header.
    #[arg(long)]
    qrels: PathBuf,
    /// NDCG cutoff.
    #[arg(long, default_value_t = 10)]
    k: usize,
    /// Worker threads. Use 1 for timing measurements.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

/// Everything a cascade borrows from.
struct Loaded {
    file: PipelineFile,
    params: Bm25Params,
    index: InvertedIndex,
    corpus: Corpus,
    registry: cascade_core::ScorerRegistry,
    clock: StdClock,
}

impl Loaded {
    fn new(args: &PipelineArgs, qrels: Option<&Arc<Qrels>>) -> Result<Self> {
        let snap = snapshot::load(&args.index)?;
        let file = PipelineFile::load(&args.config)?;
        let corpus = match args.corpus.clone().or_else(|| file.corpus_path()) {
            Some(path) => {
                let corpus = io::load_corpus(&path)?;
                if let Some(id) = snap.index.doc_ids().iter().find(|id| !corpus.contains(id)) {
                    return Err(Error::Data(format!(
                        "index document {id:?} is missing from corpus {}",
                        path.display()
                    )));
                }
                corpus
            }
            None if file.needs_corpus() => {
                return Err(Error::Config(
                    "re-ranking stages need document text: set `corpus` in the pipeline file or pass --corpus".into(),
                ))
            }
            None => Corpus::new(),
        };
        let env = std::env::var(ENDPOINT_ENV).ok();
        let registry = file.build_registry(qrels, env.as_deref())?;
        Ok(Loaded {
            params: snap.params,
            index: snap.index,
            corpus,
            registry,
            clock: StdClock::default(),
            file,
        })
    }

    fn cascade(&self, fallback: bool) -> Result<Cascade<'_>> {
        let mut config = self.file.pipeline_config(self.params);
        if fallback {
            config.on_error = FailurePolicy::FallbackToPrevious;
        }
        Ok(Cascade::new(config, &self.index, &self.corpus, &SimpleTokenizer, &self.registry, &self.clock)?)
    }
}

fn load_eval_inputs(args: &EvalArgs) -> Result<(QuerySet, Arc<Qrels>)> {
    let queries = io::load_queries(&args.queries)?;
    let (qrels, warnings) = io::load_qrels(&args.qrels)?;
    for w in warnings {
        log::warn!("{w}");
    }
    let cov = qrels.coverage(&queries, None);
    for q in &cov.unknown_queries {
        log::warn!("qrels mention query {q:?}, which is not in {}", args.queries.display());
    }
    Ok((queries, Arc::new(qrels)))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn stage_labels(c: &Cascade<'_>) -> Vec<String> {
    c.config().stages.iter().map(|s| s.label().to_string()).collect()
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Index { corpus, out, k1, b } => {
            let params = Bm25Params::new(k1, b).map_err(|e| Error::Config(e.to_string()))?;
            let corpus = io::load_corpus(&corpus)?;
            let index = InvertedIndex::build(&corpus, &SimpleTokenizer).map_err(|e| Error::Data(e.to_string()))?;
            println!("doc_count       {}", index.doc_count());
            println!("vocabulary_size {}", index.vocabulary_size());
            println!("avg_doc_length  {:.4}", index.avg_doc_length());
            snapshot::save(&out, &snapshot::Snapshot { params, index })
        }
        Command::Search {
            pipeline,
            query,
            query_id,
            qrels,
            topk,
        } => {
            let qrels = match qrels {
                Some(p) => Some(Arc::new(io::load_qrels(&p)?.0)),
                None => None,
            };
            let loaded = Loaded::new(&pipeline, qrels.as_ref())?;
            let cascade = loaded.cascade(pipeline.fallback_on_error)?;
            let result = cascade.run(&Query::new(query_id, query))?;
            print!("{}", output::search_table(&result, topk));
            Ok(())
        }
        Command::Evaluate {
            pipeline,
            eval: args,
            out,
            run,
            tag,
        } => {
            let (queries, qrels) = load_eval_inputs(&args)?;
            let loaded = Loaded::new(&pipeline, Some(&qrels))?;
            let cascade = loaded.cascade(pipeline.fallback_on_error)?;
            let report = eval::evaluate(&cascade, &queries, &qrels, args.k, args.workers)?;
            let labels = stage_labels(&cascade);
            let labels: Vec<&str> = labels.iter().map(String::as_str).collect();
            print!("{}", output::report_table(&report, &labels));
            if let Some(out) = out {
                write_file(&out, &output::report_json(&report, &labels))?;
            }
            if let Some(run) = run {
                let (judged, _) = judged_queries(&queries, &qrels);
                let results = eval::run_all(&cascade, &judged, args.workers)?;
                let text: String = results.iter().map(|r| output::trec_lines(r, &tag)).collect();
                write_file(&run, &text)?;
            }
            Ok(())
        }
        Command::Sweep {
            pipeline,
            eval: args,
            a2_values,
            out,
        } => {
            let (queries, qrels) = load_eval_inputs(&args)?;
            let loaded = Loaded::new(&pipeline, Some(&qrels))?;
            let cascade = loaded.cascade(pipeline.fallback_on_error)?;
            let points = eval::sweep(&cascade, &queries, &qrels, &a2_values, args.k, args.workers)?;
            let csv = output::sweep_csv(&points);
            print!("{csv}");
            write_file(&out, &csv)
        }
        Command::GenBenchmark {
            out_dir,
            seed,
            n_docs,
            n_queries,
            vocab_size,
            relevance_per_query,
        } => {
            let params = BenchmarkParams {
                seed,
                n_docs,
                n_queries,
                vocab_size,
                relevance_per_query,
            };
            let bench = gen_benchmark(&params).map_err(|e| Error::Config(e.to_string()))?;
            let qrels_dir = out_dir.join("qrels");
            std::fs::create_dir_all(&qrels_dir).map_err(|e| Error::io(&qrels_dir, e))?;
            io::write_corpus(&out_dir.join("corpus.jsonl"), &bench.corpus)?;
            io::write_queries(&out_dir.join("queries.jsonl"), &bench.queries)?;
            io::write_qrels(&qrels_dir.join("test.tsv"), &bench.qrels)?;
            write_file(&out_dir.join("pipeline.toml"), SAMPLE_PIPELINE)?;
            println!(
                "wrote {} documents, {} queries, {} judgments to {}",
                bench.corpus.len(),
                bench.queries.len(),
                bench.qrels.len(),
                out_dir.display()
            );
            Ok(())
        }
        Command::ServeCheck {
            endpoint,
            mode,
            timeout_secs,
        } => serve_check(&endpoint, mode, timeout_secs),
    }
}

const SAMPLE_PIPELINE: &str = r#"# BM25 top 100, a noisy pointwise re-ranker keeps 20, a stronger one orders them.
corpus = "corpus.jsonl"

[[stages]]
kind = "bm25"
cutoff = 100

[[stages]]
kind = "pointwise"
scorer = "lm"
cutoff = 20

[[stages]]
kind = "pointwise"
scorer = "large"
cutoff = 20

[scorers.lm]
type = "synthetic"
quality = 0.6
seed = 11
qrels = "qrels/test.tsv"

[scorers.large]
type = "synthetic"
quality = 0.9
seed = 12
qrels = "qrels/test.tsv"
"#;

fn serve_check(endpoint: &str, mode: Mode, timeout_secs: f64) -> Result<()> {
    let endpoint: Endpoint = endpoint.parse().map_err(Error::Config)?;
    if !(timeout_secs.is_finite() && timeout_secs > 0.0) {
        return Err(Error::Config("--timeout-secs must be positive".into()));
    }
    let options = ClientOptions {
        timeout: std::time::Duration::from_secs_f64(timeout_secs),
        ..ClientOptions::default()
    };
    let scorer = ExternalScorer::connect("serve-check", &endpoint, mode, options)?;
    println!("handshake ok: {endpoint} serves {mode}, max_input_tokens {}", cascade_core::PointwiseScorer::max_input_tokens(&scorer));
    let query = Query::new("check", "cascade serve check");
    let docs = [
        Document::new("a", "", "a short passage about re-ranking"),
        Document::new("b", "", "an unrelated passage"),
    ];
    let refs: Vec<&Document> = docs.iter().collect();
    let scores = match mode {
        Mode::Pointwise => score_pointwise(&scorer, &SimpleTokenizer, &query, &refs)?,
        Mode::Pairwise => score_pairwise_aggregate(&scorer, &SimpleTokenizer, &query, &refs)?,
    };
    println!("round trip ok: {scores:?}");
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
