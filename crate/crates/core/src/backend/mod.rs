//! Uniform model-access contract.
//!
//! Three request kinds cover everything the pipeline needs: free generation,
//! per-token log-probabilities of a fixed target continuation, and short
//! judgment replies. Two realizations exist: a live HTTP chat-completion
//! client and a deterministic scripted mock, plus wrappers for caching,
//! retries, audit logging, and per-run call counting.

mod cache;
mod http;
mod mock;

pub use cache::CachingBackend;
pub use http::{HttpBackend, HttpBackendConfig};
pub use mock::{MockBackend, MockResponse, MockRule, MockScript};

use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RequestKind {
    Generate,
    Logprobs,
    Judge,
}

/// Chat message; the wire shape follows the de facto chat-completion contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub role: String,
    pub content: String,
}

impl Message {
    pub fn system(content: impl Into<String>) -> Self {
        Message {
            role: "system".into(),
            content: content.into(),
        }
    }
    pub fn user(content: impl Into<String>) -> Self {
        Message {
            role: "user".into(),
            content: content.into(),
        }
    }
}

/// Sampling and budget parameters; part of the cache key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub max_tokens: u32,
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stop: Vec<String>,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            max_tokens: 512,
            temperature: 0.0,
            stop: Vec::new(),
        }
    }
}

/// A continuation whose tokens are to be scored by a logprobs request.
///
/// The token list uses the artifact's own tokenizer so that scores align
/// with pruning and clarity computations without a model tokenizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub text: String,
    pub tokens: Vec<String>,
}

impl Target {
    pub fn new(text: impl Into<String>) -> Self {
        let text = text.into();
        let tokens = crate::chain::tokenize(&text);
        Target { text, tokens }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendRequest {
    pub kind: RequestKind,
    pub messages: Vec<Message>,
    pub params: GenParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Target>,
}

impl BackendRequest {
    pub fn generate(prompt: impl Into<String>, params: GenParams) -> Self {
        BackendRequest {
            kind: RequestKind::Generate,
            messages: vec![Message::user(prompt)],
            params,
            target: None,
        }
    }

    pub fn judge(prompt: impl Into<String>) -> Self {
        BackendRequest {
            kind: RequestKind::Judge,
            messages: vec![Message::user(prompt)],
            params: GenParams {
                max_tokens: 8,
                ..GenParams::default()
            },
            target: None,
        }
    }

    pub fn logprobs(prompt: impl Into<String>, target: Target) -> Self {
        BackendRequest {
            kind: RequestKind::Logprobs,
            messages: vec![Message::user(prompt)],
            params: GenParams {
                max_tokens: 0,
                ..GenParams::default()
            },
            target: Some(target),
        }
    }

    /// Full text the mock's patterns are matched against: every message body
    /// plus the target continuation, if any.
    pub fn rendered(&self) -> String {
        let mut s = self
            .messages
            .iter()
            .map(|m| m.content.as_str())
            .collect::<Vec<_>>()
            .join("\n");
        if let Some(t) = &self.target {
            s.push_str("\nTARGET: ");
            s.push_str(&t.text);
        }
        s
    }
}

/// Abstract model access; implementations must be safe for concurrent calls.
pub trait ModelBackend: Send + Sync {
    /// Free-form generation.
    fn generate(&self, request: &BackendRequest) -> Result<String>;

    /// Per-token conditional log-probabilities of `request.target` given the
    /// messages; one value per target token.
    fn logprobs(&self, request: &BackendRequest) -> Result<Vec<f64>>;

    /// Raw short reply for validity judgments.
    fn judge(&self, request: &BackendRequest) -> Result<String> {
        self.generate(request)
    }

    /// Identifier mixed into cache keys.
    fn model_id(&self) -> String;

    /// Whether calls leave the process (drives the retry policy).
    fn is_live(&self) -> bool {
        false
    }
}

impl<T: ModelBackend + ?Sized> ModelBackend for &T {
    fn generate(&self, request: &BackendRequest) -> Result<String> {
        (**self).generate(request)
    }
    fn logprobs(&self, request: &BackendRequest) -> Result<Vec<f64>> {
        (**self).logprobs(request)
    }
    fn judge(&self, request: &BackendRequest) -> Result<String> {
        (**self).judge(request)
    }
    fn model_id(&self) -> String {
        (**self).model_id()
    }
    fn is_live(&self) -> bool {
        (**self).is_live()
    }
}

impl<T: ModelBackend + ?Sized> ModelBackend for Box<T> {
    fn generate(&self, request: &BackendRequest) -> Result<String> {
        (**self).generate(request)
    }
    fn logprobs(&self, request: &BackendRequest) -> Result<Vec<f64>> {
        (**self).logprobs(request)
    }
    fn judge(&self, request: &BackendRequest) -> Result<String> {
        (**self).judge(request)
    }
    fn model_id(&self) -> String {
        (**self).model_id()
    }
    fn is_live(&self) -> bool {
        (**self).is_live()
    }
}

/// Content-addressed key for a request: digest of the canonical JSON of the
/// request plus the model id. Identical requests always produce identical
/// keys; any parameter change produces a different key.
pub fn cache_key(request: &BackendRequest, model_id: &str) -> String {
    use sha2::{Digest, Sha256};
    let body = serde_json::to_string(&(request, model_id)).expect("request is serializable");
    let mut hasher = Sha256::new();
    hasher.update(body.as_bytes());
    hex::encode(hasher.finalize())
}

/// Retry wrapper for live backends: `budget` extra attempts with exponential
/// backoff on transport/status failures. Mocks are never wrapped.
pub struct RetryBackend<B> {
    inner: B,
    budget: u32,
    base_delay_ms: u64,
}

impl<B: ModelBackend> RetryBackend<B> {
    pub fn new(inner: B, budget: u32, base_delay_ms: u64) -> Self {
        RetryBackend {
            inner,
            budget,
            base_delay_ms,
        }
    }

    fn with_retries<T>(&self, mut call: impl FnMut() -> Result<T>) -> Result<T> {
        let mut attempt = 0;
        loop {
            match call() {
                Ok(v) => return Ok(v),
                Err(e) if e.is_retryable() && attempt < self.budget => {
                    std::thread::sleep(std::time::Duration::from_millis(
                        self.base_delay_ms << attempt,
                    ));
                    attempt += 1;
                }
                Err(e) => return Err(e),
            }
        }
    }
}

impl<B: ModelBackend> ModelBackend for RetryBackend<B> {
    fn generate(&self, request: &BackendRequest) -> Result<String> {
        self.with_retries(|| self.inner.generate(request))
    }
    fn logprobs(&self, request: &BackendRequest) -> Result<Vec<f64>> {
        self.with_retries(|| self.inner.logprobs(request))
    }
    fn judge(&self, request: &BackendRequest) -> Result<String> {
        self.with_retries(|| self.inner.judge(request))
    }
    fn model_id(&self) -> String {
        self.inner.model_id()
    }
    fn is_live(&self) -> bool {
        self.inner.is_live()
    }
}

/// Deterministic per-run accounting of backend traffic.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CallCounts {
    pub generate: u64,
    pub logprobs: u64,
    pub judge: u64,
}

impl CallCounts {
    pub fn total(&self) -> u64 {
        self.generate + self.logprobs + self.judge
    }
}

/// Wraps a backend and counts calls; used per run so traces can report
/// logical cost without wall-clock nondeterminism.
pub struct CountingBackend<'a> {
    inner: &'a dyn ModelBackend,
    counts: Mutex<CallCounts>,
}

impl<'a> CountingBackend<'a> {
    pub fn new(inner: &'a dyn ModelBackend) -> Self {
        CountingBackend {
            inner,
            counts: Mutex::new(CallCounts::default()),
        }
    }

    pub fn counts(&self) -> CallCounts {
        *self.counts.lock().expect("counter lock")
    }
}

impl ModelBackend for CountingBackend<'_> {
    fn generate(&self, request: &BackendRequest) -> Result<String> {
        self.counts.lock().expect("counter lock").generate += 1;
        self.inner.generate(request)
    }
    fn logprobs(&self, request: &BackendRequest) -> Result<Vec<f64>> {
        self.counts.lock().expect("counter lock").logprobs += 1;
        self.inner.logprobs(request)
    }
    fn judge(&self, request: &BackendRequest) -> Result<String> {
        self.counts.lock().expect("counter lock").judge += 1;
        self.inner.judge(request)
    }
    fn model_id(&self) -> String {
        self.inner.model_id()
    }
    fn is_live(&self) -> bool {
        self.inner.is_live()
    }
}

/// Mirrors every request/response pair to a JSON-lines audit log.
pub struct AuditBackend<B> {
    inner: B,
    log: Mutex<std::io::BufWriter<std::fs::File>>,
}

impl<B: ModelBackend> AuditBackend<B> {
    pub fn create(inner: B, path: &std::path::Path) -> Result<Self> {
        let file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)?;
        Ok(AuditBackend {
            inner,
            log: Mutex::new(std::io::BufWriter::new(file)),
        })
    }

    fn record(&self, request: &BackendRequest, response: &serde_json::Value) {
        use std::io::Write;
        let line = serde_json::json!({
            "key": cache_key(request, &self.inner.model_id()),
            "request": request,
            "response": response,
        });
        if let Ok(mut log) = self.log.lock() {
            let _ = writeln!(log, "{line}");
            let _ = log.flush();
        }
    }
}

impl<B: ModelBackend> ModelBackend for AuditBackend<B> {
    fn generate(&self, request: &BackendRequest) -> Result<String> {
        let out = self.inner.generate(request)?;
        self.record(request, &serde_json::json!({ "text": out }));
        Ok(out)
    }
    fn logprobs(&self, request: &BackendRequest) -> Result<Vec<f64>> {
        let out = self.inner.logprobs(request)?;
        self.record(request, &serde_json::json!({ "logprobs": out }));
        Ok(out)
    }
    fn judge(&self, request: &BackendRequest) -> Result<String> {
        let out = self.inner.judge(request)?;
        self.record(request, &serde_json::json!({ "text": out }));
        Ok(out)
    }
    fn model_id(&self) -> String {
        self.inner.model_id()
    }
    fn is_live(&self) -> bool {
        self.inner.is_live()
    }
}

/// Shape check shared by implementations: explicit per-token score lists must
/// match the target token count.
pub(crate) fn check_logprob_shape(request: &BackendRequest, got: usize) -> Result<()> {
    let expected = request
        .target
        .as_ref()
        .map(|t| t.tokens.len())
        .unwrap_or(0);
    if got != expected {
        return Err(Error::Alignment { expected, got });
    }
    Ok(())
}
