use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{backoff, Backend, BackendTag, ChatRequest, Completion, GatewayError, Usage};

/// Environment variable holding the bearer token.
pub const API_KEY_ENV: &str = "SIMULRAG_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

#[derive(Serialize)]
struct Message<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct RequestBody<'a> {
    model: &'a str,
    messages: Vec<Message<'a>>,
    temperature: f64,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct ResponseBody {
    choices: Vec<Choice>,
    #[serde(default)]
    usage: Option<UsageBody>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChoiceMessage,
}

#[derive(Deserialize)]
struct ChoiceMessage {
    #[serde(default)]
    content: Option<String>,
}

#[derive(Deserialize)]
struct UsageBody {
    #[serde(default)]
    prompt_tokens: u64,
    #[serde(default)]
    completion_tokens: u64,
}

/// Chat-completion client for OpenAI-compatible services.
pub struct HttpBackend {
    client: reqwest::blocking::Client,
    endpoint: String,
    api_key: Option<String>,
    retry: RetryPolicy,
}

enum Failure {
    Retryable(String),
    RateLimited(Option<Duration>),
    Fatal(String),
}

impl HttpBackend {
    /// Backend posting to `<base_url>/chat/completions`, with the bearer token
    /// read from `SIMULRAG_API_KEY`.
    pub fn new(base_url: &str) -> Result<Self, GatewayError> {
        Self::with_key(base_url, std::env::var(API_KEY_ENV).ok())
    }

    pub fn with_key(base_url: &str, api_key: Option<String>) -> Result<Self, GatewayError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| GatewayError::Transport {
                attempts: 0,
                message: e.to_string(),
            })?;
        Ok(HttpBackend {
            client,
            endpoint: format!("{}/chat/completions", base_url.trim_end_matches('/')),
            api_key: api_key.filter(|k| !k.is_empty()),
            retry: RetryPolicy::default(),
        })
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    fn attempt(&self, body: &RequestBody<'_>) -> Result<Completion, Failure> {
        let mut req = self.client.post(&self.endpoint).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| Failure::Retryable(e.to_string()))?;
        let status = resp.status();
        if status.as_u16() == 429 {
            let retry_after = resp
                .headers()
                .get(reqwest::header::RETRY_AFTER)
                .and_then(|v| v.to_str().ok())
                .and_then(|s| s.trim().parse::<u64>().ok())
                .map(Duration::from_secs);
            return Err(Failure::RateLimited(retry_after));
        }
        if status.is_server_error() {
            return Err(Failure::Retryable(format!("HTTP {status}")));
        }
        if !status.is_success() {
            let text = resp.text().unwrap_or_default();
            return Err(Failure::Fatal(format!("HTTP {status}: {text}")));
        }
        let parsed: ResponseBody = resp
            .json()
            .map_err(|e| Failure::Fatal(format!("unexpected response body: {e}")))?;
        let text = parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| Failure::Fatal("response has no choices".into()))?;
        Ok(Completion {
            text,
            backend_tag: BackendTag::Http,
            usage: parsed.usage.map(|u| Usage {
                prompt_tokens: u.prompt_tokens,
                completion_tokens: u.completion_tokens,
            }),
        })
    }
}

impl Backend for HttpBackend {
    fn tag(&self) -> BackendTag {
        BackendTag::Http
    }

    fn complete(&self, prompt: &str, model: &str, request: &ChatRequest) -> Result<Completion, GatewayError> {
        let body = RequestBody {
            model,
            messages: vec![Message {
                role: "user",
                content: prompt,
            }],
            temperature: request.temperature,
            max_tokens: request.max_tokens,
        };
        let attempts = self.retry.max_attempts.max(1);
        let mut last = Failure::Retryable("no attempt made".into());
        for attempt in 0..attempts {
            match self.attempt(&body) {
                Ok(c) => return Ok(c),
                Err(Failure::Fatal(message)) => {
                    return Err(GatewayError::Transport {
                        attempts: attempt + 1,
                        message,
                    })
                }
                Err(f) => {
                    if attempt + 1 < attempts {
                        let mut wait = backoff(self.retry.base_delay, attempt);
                        if let Failure::RateLimited(Some(after)) = &f {
                            wait = wait.max(*after);
                        }
                        log::warn!("chat completion attempt {} failed; retrying in {wait:?}", attempt + 1);
                        std::thread::sleep(wait);
                    }
                    last = f;
                }
            }
        }
        Err(match last {
            Failure::RateLimited(retry_after) => GatewayError::RateLimited { retry_after },
            Failure::Retryable(message) | Failure::Fatal(message) => GatewayError::Transport { attempts, message },
        })
    }
}
