//! JSON-lines wire protocol between the engine and scorer backends.
//!
//! One JSON object per line, tagged by `type`. The engine opens with
//! `hello`; the backend answers `hello_ok` (or `error`). Scoring requests
//! carry an `id` that the reply echoes verbatim.

use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: &str = "1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Pointwise,
    Pairwise,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Pointwise => "pointwise",
            Mode::Pairwise => "pairwise",
        })
    }
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pointwise" => Ok(Mode::Pointwise),
            "pairwise" => Ok(Mode::Pairwise),
            other => Err(format!("unknown mode {other:?}, expected pointwise or pairwise")),
        }
    }
}

/// Engine to backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Request {
    Hello {
        version: String,
        mode: Mode,
    },
    Score {
        id: u64,
        query: String,
        docs: Vec<String>,
    },
    ScorePairs {
        id: u64,
        query: String,
        pairs: Vec<(String, String)>,
    },
}

/// Backend to engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Response {
    HelloOk {
        version: String,
        mode: Mode,
        max_input_tokens: usize,
    },
    Scores {
        id: u64,
        scores: Vec<f64>,
    },
    PairScores {
        id: u64,
        p: Vec<f64>,
    },
    Error {
        #[serde(default)]
        id: Option<u64>,
        message: String,
    },
}

impl Response {
    pub fn id(&self) -> Option<u64> {
        match self {
            Response::HelloOk { .. } => None,
            Response::Scores { id, .. } | Response::PairScores { id, .. } => Some(*id),
            Response::Error { id, .. } => *id,
        }
    }
}
