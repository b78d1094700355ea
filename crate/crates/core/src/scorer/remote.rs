//! HTTP client for an external masked-LM scoring service.
//!
//! Wire protocol, UTF-8 JSON throughout:
//!
//! - `POST /v1/score` with `{"tokens": [..], "mask_index": i, "candidates": [..]}`
//!   answers `{"scores": [..]}` aligned with the candidates.
//! - `POST /v1/topn` with `{"tokens": [..], "mask_index": i, "n": n}` answers
//!   `{"candidates": [..], "scores": [..]}`, best first.
//! - `GET /v1/health` answers 200 once the model is loaded.
//!
//! Non-200 answers carry `{"error": "..."}`.

use std::io;
use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use ureq::Agent;

use super::{
    check_range, validate_scores, ContractViolation, MaskedQuery, MaskedSentence, ScoreError, ScoredCandidate, Scorer,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemoteConfig {
    /// Base URL such as `http://127.0.0.1:8000`.
    pub base_url: String,
    pub timeout: Duration,
    /// Attempts after the first one for retryable failures.
    pub retries: u32,
    /// Delay before the first retry; doubles on each further retry.
    pub backoff: Duration,
    pub max_in_flight: usize,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            base_url: "http://127.0.0.1:8000".into(),
            timeout: Duration::from_secs(30),
            retries: 3,
            backoff: Duration::from_millis(200),
            max_in_flight: 8,
        }
    }
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    tokens: &'a [String],
    mask_index: usize,
    candidates: &'a [String],
}

#[derive(Serialize)]
struct TopNRequest<'a> {
    tokens: &'a [String],
    mask_index: usize,
    n: usize,
}

#[derive(Deserialize)]
struct ScoreResponse {
    scores: Vec<f64>,
}

#[derive(Deserialize)]
struct TopNResponse {
    candidates: Vec<String>,
    scores: Vec<f64>,
}

#[derive(Deserialize)]
struct ErrorResponse {
    error: String,
}

struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn acquire(&self) -> GateGuard<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        GateGuard(self)
    }
}

struct GateGuard<'a>(&'a Gate);

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

pub struct RemoteScorer {
    config: RemoteConfig,
    agent: Agent,
    gate: Gate,
}

impl std::fmt::Debug for RemoteScorer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteScorer").field("config", &self.config).finish()
    }
}

fn map_error(e: ureq::Error) -> ScoreError {
    match e {
        ureq::Error::Timeout(t) => ScoreError::Timeout(t.to_string()),
        ureq::Error::Io(io) if io.kind() == io::ErrorKind::ConnectionRefused => {
            ScoreError::ConnectionRefused(io.to_string())
        }
        ureq::Error::Io(io) if io.kind() == io::ErrorKind::TimedOut => ScoreError::Timeout(io.to_string()),
        ureq::Error::Json(j) => ScoreError::Malformed(j.to_string()),
        other => ScoreError::Transport(other.to_string()),
    }
}

impl RemoteScorer {
    pub fn new(config: RemoteConfig) -> Self {
        let agent: Agent = Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let gate = Gate {
            free: Mutex::new(config.max_in_flight.max(1)),
            cv: Condvar::new(),
        };
        Self { config, agent, gate }
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.config.base_url.trim_end_matches('/'), path)
    }

    /// True when the service answers 200 on the health endpoint.
    pub fn health(&self) -> Result<bool, ScoreError> {
        let resp = self.agent.get(&self.url("/v1/health")).call().map_err(map_error)?;
        Ok(resp.status().as_u16() == 200)
    }

    fn post_once<B: Serialize, T: for<'de> Deserialize<'de>>(&self, path: &str, body: &B) -> Result<T, ScoreError> {
        let _slot = self.gate.acquire();
        let mut resp = self.agent.post(&self.url(path)).send_json(body).map_err(map_error)?;
        let status = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(map_error)?;
        if status != 200 {
            let message = serde_json::from_str::<ErrorResponse>(&text)
                .map(|e| e.error)
                .unwrap_or(text);
            return Err(ScoreError::Service { status, message });
        }
        serde_json::from_str(&text).map_err(|e| ScoreError::Malformed(e.to_string()))
    }

    fn post<B: Serialize, T: for<'de> Deserialize<'de>>(&self, path: &str, body: &B) -> Result<T, ScoreError> {
        let mut delay = self.config.backoff;
        let mut attempt = 0;
        loop {
            match self.post_once(path, body) {
                Err(e) if e.is_retryable() && attempt < self.config.retries => {
                    log::warn!("scorer request failed ({e}), retry {} in {delay:?}", attempt + 1);
                    thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
                other => return other,
            }
        }
    }
}

impl Scorer for RemoteScorer {
    fn name(&self) -> &str {
        "remote"
    }

    fn score(&self, query: &MaskedQuery) -> Result<Vec<ScoredCandidate>, ScoreError> {
        let body = ScoreRequest {
            tokens: query.tokens(),
            mask_index: query.mask_index(),
            candidates: &query.candidates,
        };
        let resp: ScoreResponse = self.post("/v1/score", &body)?;
        Ok(validate_scores(query, &resp.scores)?)
    }

    fn normalizes_over_candidates(&self) -> bool {
        false
    }

    fn top_n(&self, masked: &MaskedSentence, n: usize) -> Result<Vec<ScoredCandidate>, ScoreError> {
        let body = TopNRequest {
            tokens: &masked.tokens,
            mask_index: masked.mask_index,
            n,
        };
        let resp: TopNResponse = self.post("/v1/topn", &body)?;
        if resp.candidates.len() != resp.scores.len() {
            return Err(ContractViolation::Length {
                expected: resp.candidates.len(),
                got: resp.scores.len(),
            }
            .into());
        }
        check_range(&resp.scores)?;
        if let Some(index) = resp.candidates.iter().position(|c| c.is_empty()) {
            return Err(ContractViolation::UnknownWord { index }.into());
        }
        Ok(resp
            .candidates
            .into_iter()
            .zip(resp.scores)
            .map(|(word, score)| ScoredCandidate { word, score })
            .collect())
    }
}
