//! Deterministic scripted backend.
//!
//! A script is a list of pattern rules (regex over the rendered prompt,
//! optionally restricted to one request kind) plus optional per-kind FIFO
//! queues and fallback defaults. Matching is first-rule-wins, so the same
//! script and request sequence always produce the same responses.

use std::collections::VecDeque;
use std::sync::Mutex;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{check_logprob_shape, BackendRequest, ModelBackend, RequestKind};
use crate::error::{BackendErrorKind, Error, Result};

/// One scripted response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MockResponse {
    /// Text reply for generate/judge requests.
    Text { text: String },
    /// Explicit per-token scores; length must match the target token count.
    Logprobs { logprobs: Vec<f64> },
    /// One score repeated for every target token.
    UniformLogprob { logprob_per_token: f64 },
}

/// A pattern rule: applies when the kind matches (or is unset) and the regex
/// matches the rendered request text.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MockRule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<RequestKind>,
    pub pattern: String,
    pub response: MockResponse,
}

/// Serializable mock script.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct MockScript {
    /// Error on unmatched requests instead of falling back to defaults.
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub rules: Vec<MockRule>,
    /// FIFO responses consumed (in order) by generate requests that match no
    /// rule, before defaults apply.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub generate_queue: Vec<String>,
    /// Default judge reply; unset means "Yes" unless strict.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_judge: Option<String>,
    /// Default generate reply; unset means empty text unless strict.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub default_generate: Option<String>,
    /// Per-token score used when no rule matches a logprobs request.
    #[serde(default = "default_logprob")]
    pub default_logprob: f64,
}

fn default_logprob() -> f64 {
    -0.1
}

impl MockScript {
    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    /// Convenience builder used heavily in tests.
    pub fn rule(
        mut self,
        kind: Option<RequestKind>,
        pattern: impl Into<String>,
        response: MockResponse,
    ) -> Self {
        self.rules.push(MockRule {
            kind,
            pattern: pattern.into(),
            response,
        });
        self
    }

    pub fn text(content: impl Into<String>) -> MockResponse {
        MockResponse::Text {
            text: content.into(),
        }
    }
}

struct CompiledRule {
    kind: Option<RequestKind>,
    regex: Regex,
    response: MockResponse,
}

/// The scripted backend. Queue state lives behind a mutex; pattern rules are
/// stateless.
pub struct MockBackend {
    rules: Vec<CompiledRule>,
    generate_queue: Mutex<VecDeque<String>>,
    strict: bool,
    default_judge: Option<String>,
    default_generate: Option<String>,
    default_logprob: f64,
}

impl MockBackend {
    pub fn new(script: MockScript) -> Result<Self> {
        let rules = script
            .rules
            .into_iter()
            .map(|r| {
                Regex::new(&r.pattern)
                    .map(|regex| CompiledRule {
                        kind: r.kind,
                        regex,
                        response: r.response,
                    })
                    .map_err(|e| Error::Config(format!("bad mock pattern '{}': {e}", r.pattern)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(MockBackend {
            rules,
            generate_queue: Mutex::new(script.generate_queue.into()),
            strict: script.strict,
            default_judge: script.default_judge,
            default_generate: script.default_generate,
            default_logprob: script.default_logprob,
        })
    }

    fn matched(&self, request: &BackendRequest) -> Option<&MockResponse> {
        let rendered = request.rendered();
        self.rules
            .iter()
            .find(|r| {
                r.kind.map_or(true, |k| k == request.kind) && r.regex.is_match(&rendered)
            })
            .map(|r| &r.response)
    }

    fn unscripted(&self, request: &BackendRequest) -> Error {
        Error::backend(
            BackendErrorKind::Unscripted,
            format!(
                "no mock rule for {:?} request: {}",
                request.kind,
                request.rendered().chars().take(120).collect::<String>()
            ),
        )
    }

    fn text_response(&self, request: &BackendRequest, response: &MockResponse) -> Result<String> {
        match response {
            MockResponse::Text { text } => Ok(text.clone()),
            _ => Err(Error::backend(
                BackendErrorKind::Malformed,
                format!("mock rule for {:?} request must be a text response", request.kind),
            )),
        }
    }
}

impl ModelBackend for MockBackend {
    fn generate(&self, request: &BackendRequest) -> Result<String> {
        if let Some(r) = self.matched(request) {
            return self.text_response(request, r);
        }
        if request.kind == RequestKind::Generate {
            if let Some(next) = self.generate_queue.lock().expect("queue lock").pop_front() {
                return Ok(next);
            }
        }
        if self.strict {
            return Err(self.unscripted(request));
        }
        match request.kind {
            RequestKind::Judge => Ok(self.default_judge.clone().unwrap_or_else(|| "Yes".into())),
            _ => Ok(self.default_generate.clone().unwrap_or_default()),
        }
    }

    fn logprobs(&self, request: &BackendRequest) -> Result<Vec<f64>> {
        let n = request
            .target
            .as_ref()
            .map(|t| t.tokens.len())
            .unwrap_or(0);
        if let Some(r) = self.matched(request) {
            return match r {
                MockResponse::Logprobs { logprobs } => {
                    check_logprob_shape(request, logprobs.len())?;
                    Ok(logprobs.clone())
                }
                MockResponse::UniformLogprob { logprob_per_token } => {
                    Ok(vec![*logprob_per_token; n])
                }
                MockResponse::Text { .. } => Err(Error::backend(
                    BackendErrorKind::Malformed,
                    "mock rule for logprobs request must be a logprob response",
                )),
            };
        }
        if self.strict {
            return Err(self.unscripted(request));
        }
        Ok(vec![self.default_logprob; n])
    }

    fn judge(&self, request: &BackendRequest) -> Result<String> {
        self.generate(request)
    }

    fn model_id(&self) -> String {
        "mock".into()
    }
}
