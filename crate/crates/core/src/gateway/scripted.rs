use std::collections::{BTreeMap, HashMap, VecDeque};
use std::path::Path;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::{Backend, BackendTag, ChatRequest, Completion, GatewayError};

/// One line of a fixture file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fixture {
    pub key: String,
    pub response: String,
}

enum Mode {
    Keyed(HashMap<String, String>),
    Playback(Mutex<VecDeque<String>>),
}

/// Deterministic backend over recorded responses.
///
/// Keyed mode looks responses up by [`ChatRequest::fixture_key`]; playback
/// mode returns recorded responses in order regardless of the request.
pub struct ScriptedBackend {
    mode: Mode,
}

impl ScriptedBackend {
    pub fn from_fixtures(fixtures: impl IntoIterator<Item = Fixture>) -> Self {
        ScriptedBackend {
            mode: Mode::Keyed(fixtures.into_iter().map(|f| (f.key, f.response)).collect()),
        }
    }

    pub fn from_jsonl(text: &str) -> Result<Self, GatewayError> {
        let mut fixtures = Vec::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let f: Fixture = serde_json::from_str(line)
                .map_err(|e| GatewayError::Fixtures(format!("line {}: {e}", n + 1)))?;
            fixtures.push(f);
        }
        Ok(Self::from_fixtures(fixtures))
    }

    pub fn from_path(path: &Path) -> Result<Self, GatewayError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GatewayError::Fixtures(format!("{}: {e}", path.display())))?;
        Self::from_jsonl(&text)
    }

    pub fn playback(responses: impl IntoIterator<Item = String>) -> Self {
        ScriptedBackend {
            mode: Mode::Playback(Mutex::new(responses.into_iter().collect())),
        }
    }

    pub fn len(&self) -> usize {
        match &self.mode {
            Mode::Keyed(m) => m.len(),
            Mode::Playback(q) => q.lock().unwrap().len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl Backend for ScriptedBackend {
    fn tag(&self) -> BackendTag {
        BackendTag::Scripted
    }

    fn complete(&self, _prompt: &str, _model: &str, request: &ChatRequest) -> Result<Completion, GatewayError> {
        let text = match &self.mode {
            Mode::Keyed(map) => map.get(&request.fixture_key()).cloned(),
            Mode::Playback(queue) => queue.lock().unwrap().pop_front(),
        };
        let text = text.ok_or_else(|| {
            let key = request.fixture_key();
            log::error!("fixture missing for {} ({key})", request.template_id);
            GatewayError::FixtureMissing {
                template: request.template_id,
                key,
            }
        })?;
        Ok(Completion {
            text,
            backend_tag: BackendTag::Scripted,
            usage: None,
        })
    }
}

/// Wraps a backend and records every response under its fixture key.
pub struct RecordingBackend {
    inner: Arc<dyn Backend>,
    recorded: Mutex<BTreeMap<String, String>>,
}

impl RecordingBackend {
    pub fn new(inner: Arc<dyn Backend>) -> Self {
        RecordingBackend {
            inner,
            recorded: Mutex::new(BTreeMap::new()),
        }
    }

    /// Recorded fixtures sorted by key.
    pub fn fixtures(&self) -> Vec<Fixture> {
        self.recorded
            .lock()
            .unwrap()
            .iter()
            .map(|(k, v)| Fixture {
                key: k.clone(),
                response: v.clone(),
            })
            .collect()
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for f in self.fixtures() {
            out.push_str(&serde_json::to_string(&f).expect("fixture serializes"));
            out.push('\n');
        }
        out
    }
}

impl Backend for RecordingBackend {
    fn tag(&self) -> BackendTag {
        self.inner.tag()
    }

    fn complete(&self, prompt: &str, model: &str, request: &ChatRequest) -> Result<Completion, GatewayError> {
        let c = self.inner.complete(prompt, model, request)?;
        self.recorded
            .lock()
            .unwrap()
            .insert(request.fixture_key(), c.text.clone());
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gateway::TemplateId;

    #[test]
    fn playback_in_order_then_missing() {
        let b = ScriptedBackend::playback(["one".to_string(), "two".to_string()]);
        let req = ChatRequest::new(TemplateId::FinalAnswer);
        assert_eq!(b.complete("", "m", &req).unwrap().text, "one");
        assert_eq!(b.complete("", "m", &req).unwrap().text, "two");
        assert!(matches!(b.complete("", "m", &req), Err(GatewayError::FixtureMissing { .. })));
    }

    #[test]
    fn bad_fixture_line_reports_line_number() {
        let err = ScriptedBackend::from_jsonl("{\"key\":\"a\",\"response\":\"b\"}\nnot json").err().unwrap();
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn recorder_roundtrips_through_scripted() {
        let inner = Arc::new(ScriptedBackend::playback(["[]".to_string()]));
        let rec = RecordingBackend::new(inner);
        let req = ChatRequest::new(TemplateId::ClaimMerge).bind("existing_claim_set", "a").bind("new_claim_set", "b");
        rec.complete("", "m", &req).unwrap();
        let replay = ScriptedBackend::from_jsonl(&rec.to_jsonl()).unwrap();
        assert_eq!(replay.complete("", "m", &req).unwrap().text, "[]");
    }
}
