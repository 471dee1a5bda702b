//! Live HTTP chat-completion client.
//!
//! Speaks the de facto chat-completion JSON contract so any compatible
//! serving endpoint works: POST {model, messages, max_tokens, temperature,
//! stop, logprobs} and read `choices[0].message.content` plus
//! `choices[0].logprobs.content[].logprob`.
//!
//! For logprob requests the target continuation is appended as an assistant
//! message and the endpoint is asked to score it; endpoints that cannot echo
//! a fixed continuation yield a capability error.

use serde_json::{json, Value};

use super::{BackendRequest, ModelBackend, RequestKind};
use crate::error::{BackendErrorKind, Error, Result};

#[derive(Debug, Clone)]
pub struct HttpBackendConfig {
    /// Full URL of the chat-completions endpoint.
    pub endpoint: String,
    pub model: String,
    /// Bearer token; usually sourced from `ASCOT_API_TOKEN`.
    pub api_token: Option<String>,
    pub timeout_secs: u64,
}

impl HttpBackendConfig {
    pub fn from_env(endpoint: String, model: String) -> Self {
        HttpBackendConfig {
            endpoint,
            model,
            api_token: std::env::var("ASCOT_API_TOKEN").ok(),
            timeout_secs: 120,
        }
    }
}

pub struct HttpBackend {
    config: HttpBackendConfig,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(config: HttpBackendConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(std::time::Duration::from_secs(config.timeout_secs)))
            .build()
            .into();
        HttpBackend { config, agent }
    }

    fn body_for(&self, request: &BackendRequest) -> Value {
        let mut messages: Vec<Value> = request
            .messages
            .iter()
            .map(|m| json!({"role": m.role, "content": m.content}))
            .collect();
        if let Some(target) = &request.target {
            messages.push(json!({"role": "assistant", "content": target.text}));
        }
        let mut body = json!({
            "model": self.config.model,
            "messages": messages,
            "max_tokens": request.params.max_tokens,
            "temperature": request.params.temperature,
        });
        if !request.params.stop.is_empty() {
            body["stop"] = json!(request.params.stop);
        }
        if request.kind == RequestKind::Logprobs {
            body["logprobs"] = json!(true);
            body["max_tokens"] = json!(0);
            body["echo"] = json!(true);
        }
        body
    }

    fn post(&self, request: &BackendRequest) -> Result<Value> {
        let body = self.body_for(request);
        let mut call = self
            .agent
            .post(&self.config.endpoint)
            .header("content-type", "application/json");
        if let Some(token) = &self.config.api_token {
            call = call.header("authorization", &format!("Bearer {token}"));
        }
        let mut response = call.send_json(&body).map_err(|e| match e {
            ureq::Error::StatusCode(code) => Error::backend(
                BackendErrorKind::Status,
                format!("endpoint returned status {code}"),
            ),
            other => Error::backend(BackendErrorKind::Transport, other.to_string()),
        })?;
        response
            .body_mut()
            .read_json::<Value>()
            .map_err(|e| Error::backend(BackendErrorKind::Malformed, e.to_string()))
    }

    fn first_choice(value: &Value) -> Result<&Value> {
        value
            .get("choices")
            .and_then(|c| c.get(0))
            .ok_or_else(|| Error::backend(BackendErrorKind::Malformed, "response has no choices"))
    }
}

impl ModelBackend for HttpBackend {
    fn generate(&self, request: &BackendRequest) -> Result<String> {
        let value = self.post(request)?;
        let choice = Self::first_choice(&value)?;
        choice
            .pointer("/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| {
                Error::backend(BackendErrorKind::Malformed, "choice has no message content")
            })
    }

    fn logprobs(&self, request: &BackendRequest) -> Result<Vec<f64>> {
        let value = self.post(request)?;
        let choice = Self::first_choice(&value)?;
        let entries = choice
            .pointer("/logprobs/content")
            .and_then(Value::as_array)
            .ok_or_else(|| Error::Capability("per-token log-probabilities".into()))?;
        let scores: Vec<f64> = entries
            .iter()
            .filter_map(|e| e.get("logprob").and_then(Value::as_f64))
            .collect();
        if scores.is_empty() {
            return Err(Error::Capability("per-token log-probabilities".into()));
        }
        Ok(scores)
    }

    fn model_id(&self) -> String {
        self.config.model.clone()
    }

    fn is_live(&self) -> bool {
        true
    }
}
