#![allow(dead_code)]

use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use cascade::protocol::{Mode, Request, Response};

pub type Behavior = Arc<dyn Fn(&Request) -> Option<String> + Send + Sync>;

/// A scorer backend on a local TCP port. `behavior` maps each request to
/// the raw reply line, or `None` to stay silent.
pub struct Stub {
    pub endpoint: String,
    pub requests: Arc<AtomicUsize>,
}

impl Stub {
    pub fn spawn(behavior: Behavior) -> Stub {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let endpoint = format!("tcp://{}", listener.local_addr().unwrap());
        let requests = Arc::new(AtomicUsize::new(0));
        let counter = requests.clone();
        std::thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { break };
                let behavior = behavior.clone();
                let counter = counter.clone();
                std::thread::spawn(move || {
                    let mut writer = stream.try_clone().unwrap();
                    for line in BufReader::new(stream).lines() {
                        let Ok(line) = line else { break };
                        let req: Request = serde_json::from_str(&line).unwrap();
                        if !matches!(req, Request::Hello { .. }) {
                            counter.fetch_add(1, Ordering::SeqCst);
                        }
                        if let Some(reply) = behavior(&req) {
                            if writer.write_all(format!("{reply}\n").as_bytes()).is_err() {
                                break;
                            }
                        }
                    }
                });
            }
        });
        Stub { endpoint, requests }
    }

    pub fn requests(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }
}

pub fn hello_ok(mode: Mode) -> String {
    serde_json::to_string(&Response::HelloOk {
        version: "1".into(),
        mode,
        max_input_tokens: 512,
    })
    .unwrap()
}

/// Well-behaved backend: doc score is its length, pair preference 0.5 +/-.
pub fn honest(mode: Mode) -> Behavior {
    Arc::new(move |req| {
        Some(match req {
            Request::Hello { .. } => hello_ok(mode),
            Request::Score { id, docs, .. } => serde_json::to_string(&Response::Scores {
                id: *id,
                scores: docs.iter().map(|d| d.len() as f64).collect(),
            })
            .unwrap(),
            Request::ScorePairs { id, pairs, .. } => serde_json::to_string(&Response::PairScores {
                id: *id,
                p: pairs.iter().map(|(a, b)| if a.len() > b.len() { 0.9 } else { 0.1 }).collect(),
            })
            .unwrap(),
        })
    })
}
