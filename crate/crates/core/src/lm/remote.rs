//! Remote next-token provider speaking a fixed JSON-over-HTTP protocol.
//!
//! Endpoints, versioned by path:
//!   POST /v1/next_token {"context": [...], "top_k": n}
//!        -> {"candidates": [{"token": t, "logprob": l}, ...]}
//!   POST /v1/score      {"tokens": [...]}
//!        -> {"logprobs": [...]}            (one per token plus end marker)
//!   POST /v1/generate   {"prompt": p, "max_tokens": n, "temperature": t}
//!        -> {"text": s}
//!
//! Any non-2xx status is an error. Transport failures are retried a bounded
//! number of times before surfacing as a retriable [`LmError::Transport`].

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{GenParams, LmError, NextTokenProvider, TextGenerator, TokenCandidate};

#[derive(Debug, Serialize)]
struct NextTokenRequest<'a> {
    context: &'a [String],
    top_k: usize,
}

#[derive(Debug, Deserialize)]
struct WireCandidate {
    token: String,
    logprob: f64,
}

#[derive(Debug, Deserialize)]
struct NextTokenResponse {
    candidates: Vec<WireCandidate>,
}

#[derive(Debug, Serialize)]
struct ScoreRequest<'a> {
    tokens: &'a [String],
}

#[derive(Debug, Deserialize)]
struct ScoreResponse {
    logprobs: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct GenerateRequest<'a> {
    prompt: &'a str,
    max_tokens: u32,
    temperature: f64,
}

#[derive(Debug, Deserialize)]
struct GenerateResponse {
    text: String,
}

/// HTTP client for the provider protocol. Stateless between requests, so one
/// instance supports concurrent in-flight calls.
#[derive(Debug, Clone)]
pub struct RemoteProvider {
    base_url: String,
    agent: ureq::Agent,
    max_retries: u32,
}

impl RemoteProvider {
    pub fn new(base_url: &str) -> Self {
        Self::with_timeout(base_url, Duration::from_secs(30))
    }

    pub fn with_timeout(base_url: &str, timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build();
        Self {
            base_url: base_url.trim_end_matches('/').to_string(),
            agent: config.new_agent(),
            max_retries: 2,
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    fn post<Req: Serialize, Resp: for<'de> Deserialize<'de>>(
        &self,
        path: &str,
        body: &Req,
    ) -> Result<Resp, LmError> {
        let url = format!("{}{path}", self.base_url);
        let mut last_transport: Option<LmError> = None;
        for _attempt in 0..=self.max_retries {
            match self.agent.post(&url).send_json(body) {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    if !(200..300).contains(&status) {
                        return Err(LmError::Status {
                            url: url.clone(),
                            status,
                        });
                    }
                    return resp
                        .body_mut()
                        .read_json::<Resp>()
                        .map_err(|e| LmError::Protocol(e.to_string()));
                }
                Err(e) => {
                    last_transport = Some(LmError::Transport {
                        url: url.clone(),
                        msg: e.to_string(),
                    });
                }
            }
        }
        Err(last_transport.expect("at least one attempt"))
    }

    /// Probe all three endpoints with minimal payloads; returns one result
    /// per endpoint path.
    pub fn check_endpoints(&self) -> Vec<(&'static str, Result<(), LmError>)> {
        let token = vec!["the".to_string()];
        vec![
            (
                "/v1/next_token",
                self.next_token_distribution(&token, 1).map(|_| ()),
            ),
            ("/v1/score", self.score_tokens(&token).map(|_| ())),
            (
                "/v1/generate",
                self.generate_text(
                    "ping",
                    &GenParams {
                        max_tokens: 1,
                        temperature: 0.0,
                    },
                )
                .map(|_| ()),
            ),
        ]
    }
}

impl NextTokenProvider for RemoteProvider {
    fn next_token_distribution(
        &self,
        context: &[String],
        top_k: usize,
    ) -> Result<Vec<TokenCandidate>, LmError> {
        let resp: NextTokenResponse =
            self.post("/v1/next_token", &NextTokenRequest { context, top_k })?;
        if resp.candidates.is_empty() {
            return Err(LmError::EmptyDistribution);
        }
        let mut candidates = resp.candidates;
        candidates.sort_by(|a, b| {
            b.logprob
                .partial_cmp(&a.logprob)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.token.cmp(&b.token))
        });
        candidates.truncate(top_k);
        Ok(candidates
            .into_iter()
            .enumerate()
            .map(|(i, c)| TokenCandidate {
                token: c.token,
                logprob: c.logprob,
                rank: i + 1,
            })
            .collect())
    }

    fn score_tokens(&self, tokens: &[String]) -> Result<Vec<f64>, LmError> {
        if tokens.is_empty() {
            return Err(LmError::EmptyText);
        }
        let resp: ScoreResponse = self.post("/v1/score", &ScoreRequest { tokens })?;
        if resp.logprobs.len() != tokens.len() + 1 {
            return Err(LmError::Protocol(format!(
                "expected {} logprobs, got {}",
                tokens.len() + 1,
                resp.logprobs.len()
            )));
        }
        Ok(resp.logprobs)
    }
}

impl TextGenerator for RemoteProvider {
    fn generate_text(&self, prompt: &str, params: &GenParams) -> Result<String, LmError> {
        let resp: GenerateResponse = self.post(
            "/v1/generate",
            &GenerateRequest {
                prompt,
                max_tokens: params.max_tokens,
                temperature: params.temperature,
            },
        )?;
        Ok(resp.text)
    }
}
