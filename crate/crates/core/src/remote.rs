//! HTTP client for the model server (`/read`, `/verbalize`, `/embed`,
//! `/health`) and the JSON wire types it speaks.
//!
//! Clones of a [`ModelClient`] share one in-flight limit, so a worker pool
//! can hand the same client to every thread.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RemoteError {
    #[error("model server unavailable: {0}")]
    Unavailable(String),
    #[error("protocol error: {0}")]
    Protocol(String),
    #[error("expected {expected} scores, got {got}")]
    ScoreCountMismatch { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateOffsets {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadRequest {
    pub question: String,
    pub passage: String,
    pub candidates: Vec<CandidateOffsets>,
}

impl ReadRequest {
    /// Offsets must satisfy `start < end <= passage length` (in chars).
    pub fn validate(&self) -> Result<(), RemoteError> {
        let len = crate::text::char_len(&self.passage);
        for (i, c) in self.candidates.iter().enumerate() {
            if c.start >= c.end || c.end > len {
                return Err(RemoteError::Protocol(format!(
                    "candidate {i} offsets {}..{} invalid for passage of length {len}",
                    c.start, c.end
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadResponse {
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireTriple {
    pub head: String,
    pub relation: String,
    pub tail: String,
    pub tail_is_literal: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireUnit {
    pub triples: Vec<WireTriple>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pivot: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerbalizeRequest {
    pub units: Vec<WireUnit>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerbalizeResponse {
    pub sentences: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub vectors: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct ClientOptions {
    pub timeout: Duration,
    pub max_in_flight: usize,
    /// Extra attempts after a transport failure or 5xx.
    pub retries: usize,
    /// Units per `/verbalize` request.
    pub batch_size: usize,
}

impl Default for ClientOptions {
    fn default() -> Self {
        ClientOptions {
            timeout: Duration::from_secs(30),
            max_in_flight: 4,
            retries: 1,
            batch_size: 32,
        }
    }
}

#[derive(Debug)]
struct Gate {
    in_flight: Mutex<usize>,
    freed: Condvar,
    limit: usize,
}

impl Gate {
    fn acquire(&self) -> GateGuard<'_> {
        let mut n = self.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.limit {
            n = self.freed.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
        GateGuard { gate: self }
    }
}

struct GateGuard<'a> {
    gate: &'a Gate,
}

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        let mut n = self.gate.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.gate.freed.notify_one();
    }
}

#[derive(Debug, Clone)]
pub struct ModelClient {
    base: String,
    agent: ureq::Agent,
    gate: Arc<Gate>,
    options: ClientOptions,
}

impl ModelClient {
    pub fn new(endpoint: &str, options: ClientOptions) -> Self {
        let agent = ureq::AgentBuilder::new().timeout(options.timeout).build();
        ModelClient {
            base: endpoint.trim_end_matches('/').to_string(),
            agent,
            gate: Arc::new(Gate {
                in_flight: Mutex::new(0),
                freed: Condvar::new(),
                limit: options.max_in_flight.max(1),
            }),
            options,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.base
    }

    pub fn options(&self) -> &ClientOptions {
        &self.options
    }

    pub fn health(&self) -> Result<serde_json::Value, RemoteError> {
        self.send("/health", None::<&()>)
    }

    /// Scores candidates; the response must carry one finite score per
    /// candidate.
    pub fn read(&self, req: &ReadRequest) -> Result<ReadResponse, RemoteError> {
        req.validate()?;
        let resp: ReadResponse = self.send("/read", Some(req))?;
        if resp.scores.len() != req.candidates.len() {
            return Err(RemoteError::ScoreCountMismatch {
                expected: req.candidates.len(),
                got: resp.scores.len(),
            });
        }
        if resp.scores.iter().any(|s| !s.is_finite()) {
            return Err(RemoteError::Protocol("non-finite score".into()));
        }
        Ok(resp)
    }

    /// Sends units in batches of `batch_size`, at most `max_in_flight` at a
    /// time, and returns the sentences in input order.
    pub fn verbalize(&self, units: &[WireUnit]) -> Result<Vec<String>, RemoteError> {
        let batches: Vec<&[WireUnit]> = units.chunks(self.options.batch_size.max(1)).collect();
        let results: Vec<Result<Vec<String>, RemoteError>> = std::thread::scope(|scope| {
            let handles: Vec<_> = batches
                .iter()
                .map(|batch| {
                    scope.spawn(move || {
                        let req = VerbalizeRequest { units: batch.to_vec() };
                        let resp: VerbalizeResponse = self.send("/verbalize", Some(&req))?;
                        if resp.sentences.len() != batch.len() {
                            return Err(RemoteError::Protocol(format!(
                                "expected {} sentences, got {}",
                                batch.len(),
                                resp.sentences.len()
                            )));
                        }
                        Ok(resp.sentences)
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| {
                    h.join()
                        .unwrap_or_else(|_| Err(RemoteError::Protocol("worker panicked".into())))
                })
                .collect()
        });
        let mut out = Vec::with_capacity(units.len());
        for r in results {
            out.extend(r?);
        }
        Ok(out)
    }

    pub fn embed(&self, texts: &[String]) -> Result<Vec<Vec<f64>>, RemoteError> {
        let req = EmbedRequest { texts: texts.to_vec() };
        let resp: EmbedResponse = self.send("/embed", Some(&req))?;
        if resp.vectors.len() != texts.len() {
            return Err(RemoteError::Protocol(format!(
                "expected {} vectors, got {}",
                texts.len(),
                resp.vectors.len()
            )));
        }
        if let Some(first) = resp.vectors.first() {
            if resp.vectors.iter().any(|v| v.len() != first.len()) {
                return Err(RemoteError::Protocol("vectors differ in length".into()));
            }
        }
        Ok(resp.vectors)
    }

    fn send<Req: Serialize, Resp: DeserializeOwned>(
        &self,
        path: &str,
        body: Option<&Req>,
    ) -> Result<Resp, RemoteError> {
        let url = format!("{}{}", self.base, path);
        let mut last = RemoteError::Unavailable("no attempt made".into());
        for _ in 0..=self.options.retries {
            let _slot = self.gate.acquire();
            let result = match body {
                Some(b) => self.agent.post(&url).send_json(b),
                None => self.agent.get(&url).call(),
            };
            match result {
                Ok(resp) => {
                    return resp
                        .into_json::<Resp>()
                        .map_err(|e| RemoteError::Protocol(format!("{path}: {e}")))
                }
                Err(ureq::Error::Status(code, resp)) if code >= 500 => {
                    let detail = resp.into_string().unwrap_or_default();
                    last = RemoteError::Unavailable(format!("{path}: HTTP {code} {detail}"));
                }
                Err(ureq::Error::Status(code, resp)) => {
                    let detail = resp.into_string().unwrap_or_default();
                    return Err(RemoteError::Protocol(format!("{path}: HTTP {code} {detail}")));
                }
                Err(ureq::Error::Transport(t)) => {
                    last = RemoteError::Unavailable(format!("{path}: {t}"));
                }
            }
        }
        Err(last)
    }
}
