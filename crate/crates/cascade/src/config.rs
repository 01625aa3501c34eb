//! TOML pipeline files.
//!
//! ```toml
//! corpus = "corpus.jsonl"          # optional; relative to this file
//! on_error = "fail"                # or "fallback_to_previous"
//!
//! [bm25]                           # optional; defaults to the snapshot's
//! k1 = 0.9
//! b = 0.4
//!
//! [[stages]]
//! kind = "bm25"
//! cutoff = 100
//!
//! [[stages]]
//! kind = "pointwise"
//! scorer = "lm"
//! cutoff = 20
//!
//! [scorers.lm]
//! type = "synthetic"               # relevance oracle plus seeded noise
//! quality = 0.6
//! seed = 11
//! qrels = "qrels/test.tsv"         # optional; else the --qrels file
//!
//! [scorers.large]
//! type = "external"
//! mode = "pointwise"               # or "pairwise"
//! endpoint = "tcp://127.0.0.1:7001"  # optional; else $CASCADE_SCORER_ENDPOINT
//!
//! [scorers.ens]
//! type = "ensemble"
//! members = ["m1", "m2", "m3"]
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use cascade_core::{
    Bm25Params, FailurePolicy, PairwiseScorer, PipelineConfig, PointwiseScorer, Qrels, ScorerRegistry, StageKind,
    StageSpec, SyntheticScorer,
};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::external::{ClientOptions, Endpoint, ExternalScorer, DEFAULT_BATCH_SIZE};
use crate::protocol::Mode;

/// Environment variable consulted when an external scorer names no endpoint.
pub const ENDPOINT_ENV: &str = "CASCADE_SCORER_ENDPOINT";

fn pointwise() -> Mode {
    Mode::Pointwise
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ScorerDef {
    Synthetic {
        #[serde(default = "pointwise")]
        mode: Mode,
        quality: f64,
        #[serde(default)]
        seed: u64,
        qrels: Option<PathBuf>,
        max_input_tokens: Option<usize>,
    },
    External {
        #[serde(default = "pointwise")]
        mode: Mode,
        endpoint: Option<String>,
        batch_size: Option<usize>,
        timeout_secs: Option<f64>,
    },
    Ensemble {
        members: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineFile {
    pub corpus: Option<PathBuf>,
    #[serde(default)]
    pub on_error: FailurePolicy,
    pub bm25: Option<Bm25Params>,
    pub stages: Vec<StageSpec>,
    #[serde(default)]
    pub scorers: BTreeMap<String, ScorerDef>,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl PipelineFile {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut file: PipelineFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        file.base_dir = base_dir.to_path_buf();
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }

    pub fn corpus_path(&self) -> Option<PathBuf> {
        self.corpus.as_deref().map(|p| self.resolve(p))
    }

    /// The cascade config, using `default_bm25` when the file sets none.
    pub fn pipeline_config(&self, default_bm25: Bm25Params) -> PipelineConfig {
        PipelineConfig {
            stages: self.stages.clone(),
            bm25: self.bm25.unwrap_or(default_bm25),
            on_error: self.on_error,
        }
    }

    /// True when some stage re-ranks, i.e. document texts are needed.
    pub fn needs_corpus(&self) -> bool {
        self.stages.iter().any(|s| s.kind != StageKind::Bm25)
    }

    /// Builds every scorer a stage refers to. Scorers defined but unused
    /// are not constructed, so unused endpoints are never contacted.
    pub fn build_registry(&self, fallback_qrels: Option<&Arc<Qrels>>, env_endpoint: Option<&str>) -> Result<ScorerRegistry> {
        let mut builder = Builder {
            file: self,
            fallback_qrels,
            env_endpoint,
            oracles: BTreeMap::new(),
        };
        let mut registry = ScorerRegistry::new();
        let mut done: Vec<&str> = Vec::new();
        for stage in &self.stages {
            let Some(name) = stage.scorer.as_deref() else { continue };
            if done.contains(&name) {
                continue;
            }
            done.push(name);
            let def = self
                .scorers
                .get(name)
                .ok_or_else(|| Error::Config(format!("stage scorer {name:?} is not defined under [scorers]")))?;
            match def {
                ScorerDef::Ensemble { members } => {
                    if members.is_empty() {
                        return Err(Error::Config(format!("ensemble {name:?} has no members")));
                    }
                    let built = members
                        .iter()
                        .map(|m| builder.pointwise(m))
                        .collect::<Result<Vec<_>>>()?;
                    registry.ensemble(name, built);
                }
                ScorerDef::Synthetic { mode: Mode::Pairwise, .. } | ScorerDef::External { mode: Mode::Pairwise, .. } => {
                    registry.pairwise(name, builder.pairwise(name)?);
                }
                _ => {
                    registry.pointwise(name, builder.pointwise(name)?);
                }
            }
        }
        Ok(registry)
    }
}

struct Builder<'a> {
    file: &'a PipelineFile,
    fallback_qrels: Option<&'a Arc<Qrels>>,
    env_endpoint: Option<&'a str>,
    oracles: BTreeMap<PathBuf, Arc<Qrels>>,
}

impl Builder<'_> {
    fn def(&self, name: &str) -> Result<&ScorerDef> {
        self.file
            .scorers
            .get(name)
            .ok_or_else(|| Error::Config(format!("scorer {name:?} is not defined under [scorers]")))
    }

    fn oracle(&mut self, name: &str, path: Option<&Path>) -> Result<Arc<Qrels>> {
        match path {
            Some(p) => {
                let p = self.file.resolve(p);
                if let Some(q) = self.oracles.get(&p) {
                    return Ok(q.clone());
                }
                let (qrels, warnings) = crate::io::load_qrels(&p)?;
                for w in warnings {
                    log::warn!("{w}");
                }
                let q = Arc::new(qrels);
                self.oracles.insert(p, q.clone());
                Ok(q)
            }
            None => self.fallback_qrels.cloned().ok_or_else(|| {
                Error::Config(format!("synthetic scorer {name:?} needs `qrels` in the config or a --qrels file"))
            }),
        }
    }

    fn synthetic(&mut self, name: &str, quality: f64, seed: u64, qrels: Option<&Path>, max: Option<usize>) -> Result<SyntheticScorer> {
        let oracle = self.oracle(name, qrels)?;
        let s = SyntheticScorer::new(name, quality, seed, oracle).map_err(|e| Error::Config(e.to_string()))?;
        Ok(match max {
            Some(m) => s.with_max_input_tokens(m),
            None => s,
        })
    }

    fn external(&self, name: &str, mode: Mode, endpoint: Option<&str>, batch: Option<usize>, timeout: Option<f64>) -> Result<ExternalScorer> {
        let spec = endpoint.or(self.env_endpoint).ok_or_else(|| {
            Error::Config(format!("external scorer {name:?} has no endpoint and ${ENDPOINT_ENV} is unset"))
        })?;
        let endpoint: Endpoint = spec.parse().map_err(Error::Config)?;
        let mut options = ClientOptions {
            batch_size: batch.unwrap_or(DEFAULT_BATCH_SIZE),
            ..ClientOptions::default()
        };
        if let Some(t) = timeout {
            if !(t.is_finite() && t > 0.0) {
                return Err(Error::Config(format!("scorer {name:?}: timeout_secs must be positive")));
            }
            options.timeout = Duration::from_secs_f64(t);
        }
        Ok(ExternalScorer::connect(name, &endpoint, mode, options)?)
    }

    fn pointwise(&mut self, name: &str) -> Result<Arc<dyn PointwiseScorer>> {
        match self.def(name)?.clone() {
            ScorerDef::Synthetic {
                mode: Mode::Pointwise,
                quality,
                seed,
                qrels,
                max_input_tokens,
            } => Ok(Arc::new(self.synthetic(name, quality, seed, qrels.as_deref(), max_input_tokens)?)),
            ScorerDef::External {
                mode: Mode::Pointwise,
                endpoint,
                batch_size,
                timeout_secs,
            } => Ok(Arc::new(self.external(name, Mode::Pointwise, endpoint.as_deref(), batch_size, timeout_secs)?)),
            _ => Err(Error::Config(format!("scorer {name:?} is not a pointwise scorer"))),
        }
    }

    fn pairwise(&mut self, name: &str) -> Result<Arc<dyn PairwiseScorer>> {
        match self.def(name)?.clone() {
            ScorerDef::Synthetic {
                mode: Mode::Pairwise,
                quality,
                seed,
                qrels,
                max_input_tokens,
            } => Ok(Arc::new(self.synthetic(name, quality, seed, qrels.as_deref(), max_input_tokens)?)),
            ScorerDef::External {
                mode: Mode::Pairwise,
                endpoint,
                batch_size,
                timeout_secs,
            } => Ok(Arc::new(self.external(name, Mode::Pairwise, endpoint.as_deref(), batch_size, timeout_secs)?)),
            _ => Err(Error::Config(format!("scorer {name:?} is not a pairwise scorer"))),
        }
    }
}
