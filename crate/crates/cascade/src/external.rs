//! Client for out-of-process scorer backends.
//!
//! An endpoint is either `tcp://host:port` or `stdio:<command> [args...]`,
//! where the command is spawned and spoken to over its stdin/stdout. The
//! client sends batches of at most `batch_size` documents (or pairs) per
//! request and waits up to `timeout` for each reply. After a timeout or a
//! protocol violation the connection is considered broken and every later
//! call fails.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::time::Duration;

use cascade_core::scorer::Passage;
use cascade_core::{PairwiseScorer, PointwiseScorer, Query, ScoreError};

use crate::protocol::{Mode, Request, Response, PROTOCOL_VERSION};

pub const DEFAULT_BATCH_SIZE: usize = 32;
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    Tcp(String),
    Stdio(Vec<String>),
}

impl std::str::FromStr for Endpoint {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Some(addr) = s.strip_prefix("tcp://") {
            if addr.is_empty() {
                return Err("tcp endpoint needs host:port".into());
            }
            Ok(Endpoint::Tcp(addr.into()))
        } else if let Some(cmd) = s.strip_prefix("stdio:") {
            let argv: Vec<String> = cmd.split_whitespace().map(String::from).collect();
            if argv.is_empty() {
                return Err("stdio endpoint needs a command".into());
            }
            Ok(Endpoint::Stdio(argv))
        } else {
            Err(format!("endpoint {s:?} must start with tcp:// or stdio:"))
        }
    }
}

impl std::fmt::Display for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Endpoint::Tcp(a) => write!(f, "tcp://{a}"),
            Endpoint::Stdio(argv) => write!(f, "stdio:{}", argv.join(" ")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ClientOptions {
    pub batch_size: usize,
    pub timeout: Duration,
}

impl Default for ClientOptions {
    fn default() -> Self {
        ClientOptions {
            batch_size: DEFAULT_BATCH_SIZE,
            timeout: DEFAULT_TIMEOUT,
        }
    }
}

struct Connection {
    writer: Box<dyn Write + Send>,
    replies: Receiver<std::io::Result<String>>,
    child: Option<Child>,
    broken: Option<String>,
}

impl Drop for Connection {
    fn drop(&mut self) {
        if let Some(child) = &mut self.child {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

/// Reads lines on a helper thread so replies can be awaited with a timeout
/// on any transport.
fn spawn_reader(stream: impl std::io::Read + Send + 'static) -> Receiver<std::io::Result<String>> {
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        for line in BufReader::new(stream).lines() {
            let stop = line.is_err();
            if tx.send(line).is_err() || stop {
                break;
            }
        }
    });
    rx
}

impl Connection {
    fn open(endpoint: &Endpoint) -> Result<Self, String> {
        match endpoint {
            Endpoint::Tcp(addr) => {
                let stream = TcpStream::connect(addr).map_err(|e| format!("connect {addr}: {e}"))?;
                let _ = stream.set_nodelay(true);
                let reader = stream.try_clone().map_err(|e| e.to_string())?;
                Ok(Connection {
                    writer: Box::new(stream),
                    replies: spawn_reader(reader),
                    child: None,
                    broken: None,
                })
            }
            Endpoint::Stdio(argv) => {
                let mut child = Command::new(&argv[0])
                    .args(&argv[1..])
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .spawn()
                    .map_err(|e| format!("spawn {}: {e}", argv[0]))?;
                let stdin: ChildStdin = child.stdin.take().expect("piped stdin");
                let stdout = child.stdout.take().expect("piped stdout");
                Ok(Connection {
                    writer: Box::new(stdin),
                    replies: spawn_reader(stdout),
                    child: Some(child),
                    broken: None,
                })
            }
        }
    }

    fn round_trip(&mut self, request: &Request, timeout: Duration) -> Result<Response, String> {
        if let Some(why) = &self.broken {
            return Err(format!("connection unusable after earlier failure: {why}"));
        }
        let result = self.exchange(request, timeout);
        if let Err(why) = &result {
            self.broken = Some(why.clone());
        }
        result
    }

    fn exchange(&mut self, request: &Request, timeout: Duration) -> Result<Response, String> {
        let mut line = serde_json::to_string(request).map_err(|e| e.to_string())?;
        line.push('\n');
        self.writer
            .write_all(line.as_bytes())
            .and_then(|_| self.writer.flush())
            .map_err(|e| format!("send: {e}"))?;
        let reply = match self.replies.recv_timeout(timeout) {
            Ok(Ok(reply)) => reply,
            Ok(Err(e)) => return Err(format!("receive: {e}")),
            Err(RecvTimeoutError::Timeout) => return Err(format!("no reply within {timeout:?}")),
            Err(RecvTimeoutError::Disconnected) => return Err("backend closed the connection".into()),
        };
        serde_json::from_str(&reply).map_err(|e| format!("malformed reply {reply:?}: {e}"))
    }
}

/// Pointwise or pairwise scorer backed by an external process.
pub struct ExternalScorer {
    name: String,
    mode: Mode,
    max_input_tokens: usize,
    options: ClientOptions,
    next_id: AtomicU64,
    conn: Mutex<Connection>,
}

impl std::fmt::Debug for ExternalScorer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalScorer")
            .field("name", &self.name)
            .field("mode", &self.mode)
            .field("max_input_tokens", &self.max_input_tokens)
            .finish()
    }
}

impl ExternalScorer {
    /// Connects and performs the handshake. Fails if the backend speaks a
    /// different protocol version or serves the other mode.
    pub fn connect(
        name: impl Into<String>,
        endpoint: &Endpoint,
        mode: Mode,
        options: ClientOptions,
    ) -> Result<Self, ScoreError> {
        let name = name.into();
        let fail = |m: String| ScoreError::backend(name.clone(), format!("{endpoint}: {m}"));
        if options.batch_size == 0 {
            return Err(fail("batch size must be at least 1".into()));
        }
        let mut conn = Connection::open(endpoint).map_err(fail)?;
        let hello = Request::Hello {
            version: PROTOCOL_VERSION.into(),
            mode,
        };
        let max_input_tokens = match conn.round_trip(&hello, options.timeout).map_err(fail)? {
            Response::HelloOk {
                version,
                mode: served,
                max_input_tokens,
            } => {
                if version != PROTOCOL_VERSION {
                    return Err(fail(format!(
                        "protocol version {version:?} not supported, expected {PROTOCOL_VERSION:?}"
                    )));
                }
                if served != mode {
                    return Err(fail(format!("backend serves {served}, expected {mode}")));
                }
                if max_input_tokens == 0 {
                    return Err(fail("backend advertised max_input_tokens 0".into()));
                }
                max_input_tokens
            }
            Response::Error { message, .. } => return Err(fail(format!("hello rejected: {message}"))),
            other => return Err(fail(format!("unexpected handshake reply {other:?}"))),
        };
        Ok(ExternalScorer {
            name,
            mode,
            max_input_tokens,
            options,
            next_id: AtomicU64::new(1),
            conn: Mutex::new(conn),
        })
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    fn fail(&self, message: impl Into<String>) -> ScoreError {
        ScoreError::backend(self.name.clone(), message)
    }

    fn wrong_mode(&self, wanted: Mode) -> ScoreError {
        self.fail(format!("scorer is {}, called as {wanted}", self.mode))
    }

    /// Sends one request and returns the values of the matching reply.
    fn call(&self, build: impl FnOnce(u64) -> Request, expected: usize) -> Result<Vec<f64>, ScoreError> {
        let id = self.next_id.fetch_add(1, Ordering::Relaxed);
        let request = build(id);
        let mut conn = self.conn.lock().unwrap_or_else(|p| p.into_inner());
        let reply = conn.round_trip(&request, self.options.timeout).map_err(|m| self.fail(m))?;
        if reply.id() != Some(id) {
            conn.broken = Some(format!("reply id {:?} does not match request {id}", reply.id()));
            return Err(self.fail(conn.broken.clone().unwrap()));
        }
        let values = match (reply, &request) {
            (Response::Scores { scores, .. }, Request::Score { .. }) => scores,
            (Response::PairScores { p, .. }, Request::ScorePairs { .. }) => p,
            (Response::Error { message, .. }, _) => return Err(self.fail(format!("backend error: {message}"))),
            (other, _) => return Err(self.fail(format!("reply type does not match request: {other:?}"))),
        };
        if values.len() != expected {
            return Err(ScoreError::Alignment {
                expected,
                got: values.len(),
            });
        }
        Ok(values)
    }
}

impl PointwiseScorer for ExternalScorer {
    fn name(&self) -> &str {
        &self.name
    }

    fn max_input_tokens(&self) -> usize {
        self.max_input_tokens
    }

    fn score_batch(&self, query: &Query, passages: &[Passage<'_>]) -> Result<Vec<f64>, ScoreError> {
        if self.mode != Mode::Pointwise {
            return Err(self.wrong_mode(Mode::Pointwise));
        }
        let mut out = Vec::with_capacity(passages.len());
        for chunk in passages.chunks(self.options.batch_size) {
            let scores = self.call(
                |id| Request::Score {
                    id,
                    query: query.text.clone(),
                    docs: chunk.iter().map(|p| p.text.clone()).collect(),
                },
                chunk.len(),
            )?;
            if let Some(pos) = scores.iter().position(|s| !s.is_finite()) {
                return Err(ScoreError::NonFinite {
                    doc_id: chunk[pos].doc_id.into(),
                });
            }
            out.extend(scores);
        }
        Ok(out)
    }
}

impl PairwiseScorer for ExternalScorer {
    fn name(&self) -> &str {
        &self.name
    }

    fn max_input_tokens(&self) -> usize {
        self.max_input_tokens
    }

    fn score_pairs(&self, query: &Query, pairs: &[(Passage<'_>, Passage<'_>)]) -> Result<Vec<f64>, ScoreError> {
        if self.mode != Mode::Pairwise {
            return Err(self.wrong_mode(Mode::Pairwise));
        }
        let mut out = Vec::with_capacity(pairs.len());
        for chunk in pairs.chunks(self.options.batch_size) {
            let p = self.call(
                |id| Request::ScorePairs {
                    id,
                    query: query.text.clone(),
                    pairs: chunk.iter().map(|(a, b)| (a.text.clone(), b.text.clone())).collect(),
                },
                chunk.len(),
            )?;
            // NaN fails the range check too.
            if let Some(pos) = p.iter().position(|v| !(0.0..=1.0).contains(v)) {
                return Err(ScoreError::PairOutOfRange {
                    first: chunk[pos].0.doc_id.into(),
                    second: chunk[pos].1.doc_id.into(),
                    value: p[pos],
                });
            }
            out.extend(p);
        }
        Ok(out)
    }
}
