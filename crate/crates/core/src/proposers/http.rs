//! Client for an external proposal service.
//!
//! `POST {endpoint}/propose` with `{"context": [lines], "n": n}`; the reply is
//! `{"candidates": [strings]}`.

use std::collections::VecDeque;
use std::time::Duration;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::engine::{ProposalError, ProposalRequest, ProposalSource};

/// Environment variable holding the service base URL.
pub const PROPOSER_URL_ENV: &str = "DUALSYS_PROPOSER_URL";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProposeRequest {
    pub context: Vec<String>,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProposeResponse {
    pub candidates: Vec<String>,
}

/// Fetches `n` candidates per line in one request and hands them to the
/// engine in order, fetching again if a line needs more.
#[derive(Debug)]
pub struct HttpProposalSource {
    url: String,
    n: usize,
    agent: ureq::Agent,
    buffer: VecDeque<String>,
    line: Option<usize>,
    requests: usize,
}

impl HttpProposalSource {
    pub fn new(endpoint: &str, n: usize, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(true)
            .build()
            .into();
        Self {
            url: format!("{}/propose", endpoint.trim_end_matches('/')),
            n: n.max(1),
            agent,
            buffer: VecDeque::new(),
            line: None,
            requests: 0,
        }
    }

    /// Endpoint taken from `DUALSYS_PROPOSER_URL`.
    pub fn from_env(n: usize, timeout: Duration) -> Result<Self, ProposalError> {
        let endpoint = std::env::var(PROPOSER_URL_ENV)
            .map_err(|_| ProposalError::Transport(format!("{PROPOSER_URL_ENV} is not set")))?;
        Ok(Self::new(&endpoint, n, timeout))
    }

    /// Requests sent so far.
    pub fn requests(&self) -> usize {
        self.requests
    }

    pub fn lm_next(&mut self, context: &[String], n: usize) -> Result<Vec<String>, ProposalError> {
        self.requests += 1;
        let body = ProposeRequest {
            context: context.to_vec(),
            n,
        };
        let text = self
            .agent
            .post(&self.url)
            .send_json(&body)
            .and_then(|mut r| r.body_mut().read_to_string())
            .map_err(|e| ProposalError::Transport(e.to_string()))?;
        let reply: ProposeResponse =
            serde_json::from_str(&text).map_err(|e| ProposalError::Decode(e.to_string()))?;
        Ok(reply.candidates)
    }
}

impl ProposalSource for HttpProposalSource {
    fn next_candidate(
        &mut self,
        request: &ProposalRequest<'_>,
        _rng: &mut dyn RngCore,
    ) -> Result<Option<String>, ProposalError> {
        if self.line != Some(request.line_index) {
            self.buffer.clear();
            self.line = Some(request.line_index);
        }
        if self.buffer.is_empty() {
            self.buffer = self.lm_next(request.context, self.n)?.into();
        }
        Ok(self.buffer.pop_front())
    }
}
