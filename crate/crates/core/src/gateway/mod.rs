//! Uniform access to language-model completions.
//!
//! A [`Gateway`] renders a [`ChatRequest`] through its prompt template, waits
//! for a slot under the in-flight limit and hands the prompt to a [`Backend`].
//! [`ScriptedBackend`] replays fixtures keyed by request content,
//! [`HttpBackend`] talks to a chat-completion service and
//! [`crate::offline::OfflineBackend`] answers from built-in rules.

mod http;
mod limiter;
mod scripted;
pub mod structured;
pub mod templates;

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::domain::{BackendConfig, BackendKind};

pub use http::{HttpBackend, RetryPolicy, API_KEY_ENV};
pub use limiter::{Limiter, Permit};
pub use scripted::{Fixture, RecordingBackend, ScriptedBackend};
pub use structured::{parse_structured, EntailmentLabel, QaDraft, Shape, Structured, TemplateDraft, VerifyVerdict};
pub use templates::{render_prompt, template_versions, PromptTemplate, TemplateId};

#[derive(Debug, Clone, Error)]
pub enum GatewayError {
    #[error("unknown template {0:?}")]
    UnknownTemplate(String),
    #[error("template {template} needs a binding for {name:?}")]
    MissingBinding { template: TemplateId, name: String },
    #[error("no fixture for {template} request (key {key}); record one before replaying")]
    FixtureMissing { template: TemplateId, key: String },
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("rate limited (retry after {retry_after:?})")]
    RateLimited { retry_after: Option<Duration> },
    #[error("malformed {shape} output from {template} after repair: {message}")]
    MalformedStructuredOutput {
        template: TemplateId,
        shape: &'static str,
        message: String,
        raw: String,
    },
    #[error("fixture file: {0}")]
    Fixtures(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendTag {
    Scripted,
    Http,
    Offline,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Completion {
    pub text: String,
    pub backend_tag: BackendTag,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<Usage>,
}

/// A templated completion request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub template_id: TemplateId,
    pub bindings: BTreeMap<String, String>,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Distinguishes repeated samples of an otherwise identical request.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample: Option<u32>,
    /// Repair attempt number; 0 for the original request.
    #[serde(default)]
    pub repair: u8,
}

impl ChatRequest {
    pub fn new(template_id: TemplateId) -> Self {
        ChatRequest {
            template_id,
            bindings: BTreeMap::new(),
            temperature: 0.0,
            max_tokens: 1024,
            sample: None,
            repair: 0,
        }
    }

    pub fn bind(mut self, name: &str, value: impl Into<String>) -> Self {
        self.bindings.insert(name.to_string(), value.into());
        self
    }

    pub fn temperature(mut self, t: f64) -> Self {
        self.temperature = t;
        self
    }

    pub fn sample(mut self, index: u32) -> Self {
        self.sample = Some(index);
        self
    }

    /// Content address: template id plus SHA-256 of the canonical bindings.
    pub fn fixture_key(&self) -> String {
        let mut material = serde_json::to_string(&self.bindings).expect("string map serializes");
        if let Some(s) = self.sample {
            material.push_str(&format!("#sample={s}"));
        }
        if self.repair > 0 {
            material.push_str(&format!("#repair={}", self.repair));
        }
        let digest = Sha256::digest(material.as_bytes());
        format!("{}:{}", self.template_id, hex::encode(digest))
    }

    /// Full prompt text, including the repair suffix on repair attempts.
    pub fn prompt(&self) -> Result<String, GatewayError> {
        render_prompt(self.template_id, &self.bindings)
    }
}

/// A completion provider.
pub trait Backend: Send + Sync {
    fn tag(&self) -> BackendTag;

    fn complete(&self, prompt: &str, model: &str, request: &ChatRequest) -> Result<Completion, GatewayError>;
}

/// Which model a request is routed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Main,
    Judge,
}

/// Thread-safe entry point for all model calls.
#[derive(Clone)]
pub struct Gateway {
    backend: Arc<dyn Backend>,
    model: String,
    judge_model: String,
    max_tokens: u32,
    limiter: Arc<Limiter>,
}

/// Default in-flight request limit.
pub const DEFAULT_CONCURRENCY: usize = 4;

impl Gateway {
    pub fn new(backend: Arc<dyn Backend>, model: impl Into<String>) -> Self {
        let model = model.into();
        Gateway {
            backend,
            judge_model: model.clone(),
            model,
            max_tokens: 1024,
            limiter: Arc::new(Limiter::new(DEFAULT_CONCURRENCY)),
        }
    }

    /// Gateway over fixtures parsed from JSON Lines text.
    pub fn scripted(fixtures_jsonl: &str) -> Result<Self, GatewayError> {
        Ok(Gateway::new(Arc::new(ScriptedBackend::from_jsonl(fixtures_jsonl)?), "scripted"))
    }

    /// Gateway for a configured backend.
    pub fn from_config(config: &BackendConfig, concurrency: usize) -> Result<Self, GatewayError> {
        let backend: Arc<dyn Backend> = match config.kind {
            BackendKind::Scripted => {
                let path = config
                    .fixtures
                    .as_deref()
                    .ok_or_else(|| GatewayError::Fixtures("scripted backend needs a fixture file".into()))?;
                Arc::new(ScriptedBackend::from_path(std::path::Path::new(path))?)
            }
            BackendKind::Http => {
                let url = config
                    .base_url
                    .as_deref()
                    .ok_or_else(|| GatewayError::Transport {
                        attempts: 0,
                        message: "http backend needs base_url".into(),
                    })?;
                Arc::new(HttpBackend::new(url)?)
            }
            BackendKind::Offline => Arc::new(crate::offline::OfflineBackend::new()),
        };
        Ok(Gateway::new(backend, config.model.clone())
            .with_judge_model(config.judge_model.clone().unwrap_or_else(|| config.model.clone()))
            .with_max_tokens(config.max_tokens)
            .with_concurrency(concurrency))
    }

    pub fn with_judge_model(mut self, model: impl Into<String>) -> Self {
        self.judge_model = model.into();
        self
    }

    pub fn with_concurrency(mut self, limit: usize) -> Self {
        self.limiter = Arc::new(Limiter::new(limit.max(1)));
        self
    }

    pub fn with_max_tokens(mut self, max_tokens: u32) -> Self {
        self.max_tokens = max_tokens;
        self
    }

    pub fn concurrency(&self) -> usize {
        self.limiter.limit()
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    /// Apply `f` to every item on up to `concurrency()` worker threads.
    /// Results come back in input order.
    pub fn map_concurrent<T: Sync, R: Send>(&self, items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
        map_concurrent(self.concurrency(), items, f)
    }

    pub fn backend_tag(&self) -> BackendTag {
        self.backend.tag()
    }

    pub fn complete(&self, request: &ChatRequest) -> Result<Completion, GatewayError> {
        self.complete_as(Role::Main, request)
    }

    pub fn complete_as(&self, role: Role, request: &ChatRequest) -> Result<Completion, GatewayError> {
        let mut prompt = request.prompt()?;
        if request.repair > 0 {
            let wanted = request
                .bindings
                .get("__repair_shape")
                .map(String::as_str)
                .unwrap_or("valid output");
            prompt.push_str(&format!(
                "\n\nYour previous response could not be parsed. Respond with {wanted} only, and nothing else."
            ));
        }
        let model = match role {
            Role::Main => &self.model,
            Role::Judge => &self.judge_model,
        };
        let mut request = request.clone();
        request.max_tokens = request.max_tokens.min(self.max_tokens);
        let _permit = self.limiter.acquire();
        self.backend.complete(&prompt, model, &request)
    }

    /// Complete and parse, with one repair re-prompt on malformed output.
    pub fn complete_parsed<T>(
        &self,
        role: Role,
        request: &ChatRequest,
        shape: Shape,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Result<T, GatewayError> {
        let first = self.complete_as(role, request)?;
        let first_err = match parse(&first.text) {
            Ok(v) => return Ok(v),
            Err(e) => e,
        };
        log::warn!("{} output not parseable as {} ({first_err}); re-prompting", request.template_id, shape.as_str());
        let mut repair = request.clone();
        repair.repair = 1;
        repair
            .bindings
            .entry("__repair_shape".to_string())
            .or_insert_with(|| shape.repair_instruction().to_string());
        let second = self.complete_as(role, &repair)?;
        parse(&second.text).map_err(|message| GatewayError::MalformedStructuredOutput {
            template: request.template_id,
            shape: shape.as_str(),
            message,
            raw: second.text,
        })
    }

    /// Complete and parse into a [`Structured`] value of the given shape.
    pub fn complete_structured(&self, role: Role, request: &ChatRequest, shape: Shape) -> Result<Structured, GatewayError> {
        self.complete_parsed(role, request, shape, |t| parse_structured(t, shape))
    }
}

/// Ordered parallel map over a fixed number of worker threads.
pub fn map_concurrent<T: Sync, R: Send>(workers: usize, items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = workers.max(1).min(items.len());
    if workers <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                *slots[i].lock().unwrap() = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|m| m.into_inner().unwrap().expect("every slot filled"))
        .collect()
}

/// Retry delay helper shared by backends.
pub(crate) fn backoff(base: Duration, attempt: u32) -> Duration {
    base.saturating_mul(1u32 << attempt.min(16))
}
