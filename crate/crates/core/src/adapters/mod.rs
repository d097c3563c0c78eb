//! Uniform client for external model backends.
//!
//! Every model call (titles, embeddings, paraphrase, definition
//! classification, speech synthesis) goes through [`AdapterRegistry`]. Each
//! capability resolves to one backend: the deterministic built-in stub, a
//! child process speaking JSON lines, an HTTP endpoint, or nothing at all.
//! Requests carry `"proto": "v1"` and a `request_id` that the response must
//! echo.

mod cassette;
mod http;
mod protocol;
mod stub;
mod subprocess;

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

pub use cassette::{Cassette, CassetteEntry, ReplayBackend};
pub use http::HttpBackend;
pub use protocol::{AdapterRequest, AdapterResponse, Capability, PROTO_VERSION};
pub use stub::StubBackend;
pub use subprocess::SubprocessBackend;

use crate::textmetrics::EmbeddingVector;

pub const DEFAULT_TIMEOUT_S: f64 = 10.0;
pub const DEFAULT_RETRIES: u32 = 2;

/// A transport able to answer one request.
pub trait Backend: Send + Sync {
    /// `Err` is a transport-level failure; a backend-reported failure is an
    /// `Ok` response with `ok: false`.
    fn exchange(&self, request: &AdapterRequest, timeout: Duration) -> Result<AdapterResponse, String>;

    fn describe(&self) -> String;
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("adapter `{capability}` failed after {attempts} attempt(s): {last_error}")]
pub struct AdapterError {
    pub capability: Capability,
    pub attempts: u32,
    pub last_error: String,
}

#[derive(Debug, Error)]
pub enum AdapterConfigError {
    #[error("cannot read adapter config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid adapter config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum BackendSpec {
    Stub,
    Disabled,
    Subprocess(Vec<String>),
    Http(String),
}

impl BackendSpec {
    fn from_value(value: &Value) -> Result<Self, String> {
        match value {
            Value::String(s) if s == "stub" => Ok(BackendSpec::Stub),
            Value::String(s) if s == "none" => Ok(BackendSpec::Disabled),
            Value::Object(map) => {
                if let Some(inner) = map.get("backend") {
                    return Self::from_value(inner);
                }
                if let Some(cmd) = map.get("cmd") {
                    let cmd: Vec<String> = serde_json::from_value(cmd.clone())
                        .map_err(|_| "`cmd` must be a list of strings".to_string())?;
                    if cmd.is_empty() {
                        return Err("`cmd` must not be empty".into());
                    }
                    return Ok(BackendSpec::Subprocess(cmd));
                }
                if let Some(Value::String(url)) = map.get("url") {
                    return Ok(BackendSpec::Http(url.clone()));
                }
                Err(format!("unrecognised backend {value}"))
            }
            other => Err(format!("unrecognised backend {other}")),
        }
    }
}

/// Parsed `adapters.json`. Capabilities not mentioned use the stub.
#[derive(Debug, Clone, PartialEq)]
pub struct AdapterSettings {
    pub backends: BTreeMap<Capability, BackendSpec>,
    pub timeout_s: f64,
    pub retries: u32,
}

impl Default for AdapterSettings {
    fn default() -> Self {
        AdapterSettings {
            backends: Capability::ALL.into_iter().map(|c| (c, BackendSpec::Stub)).collect(),
            timeout_s: DEFAULT_TIMEOUT_S,
            retries: DEFAULT_RETRIES,
        }
    }
}

impl AdapterSettings {
    pub fn parse(content: &str) -> Result<Self, AdapterConfigError> {
        #[derive(Deserialize)]
        struct Raw {
            timeout_s: Option<f64>,
            retries: Option<u32>,
            #[serde(flatten)]
            rest: BTreeMap<String, Value>,
        }
        let raw: Raw = serde_json::from_str(content)
            .map_err(|e| AdapterConfigError::Invalid(e.to_string()))?;
        let mut settings = AdapterSettings::default();
        if let Some(t) = raw.timeout_s {
            if !(t > 0.0) {
                return Err(AdapterConfigError::Invalid("timeout_s must be positive".into()));
            }
            settings.timeout_s = t;
        }
        if let Some(r) = raw.retries {
            settings.retries = r;
        }
        for (key, value) in raw.rest {
            let cap = Capability::from_op(&key)
                .ok_or_else(|| AdapterConfigError::Invalid(format!("unknown capability `{key}`")))?;
            let spec = BackendSpec::from_value(&value)
                .map_err(|e| AdapterConfigError::Invalid(format!("{key}: {e}")))?;
            settings.backends.insert(cap, spec);
        }
        Ok(settings)
    }

    pub fn load(path: &Path) -> Result<Self, AdapterConfigError> {
        let content = std::fs::read_to_string(path).map_err(|source| AdapterConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&content)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DefinitionLabel {
    pub is_definition: bool,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpeechAudio {
    pub audio_path: Option<String>,
    pub duration_s: f64,
}

pub struct AdapterRegistry {
    backends: BTreeMap<Capability, Arc<dyn Backend>>,
    timeout: Duration,
    retries: u32,
    next_id: AtomicU64,
    recorder: Option<Mutex<Cassette>>,
}

impl AdapterRegistry {
    /// Every capability served by the built-in stubs.
    pub fn stubs() -> Self {
        Self::with_stub(StubBackend::default())
    }

    pub fn with_stub(stub: StubBackend) -> Self {
        let stub: Arc<dyn Backend> = Arc::new(stub);
        let backends = Capability::ALL.into_iter().map(|c| (c, stub.clone())).collect();
        Self::from_backends(backends, Duration::from_secs_f64(DEFAULT_TIMEOUT_S), DEFAULT_RETRIES)
    }

    pub fn from_settings(settings: &AdapterSettings, stub: StubBackend) -> Self {
        let stub: Arc<dyn Backend> = Arc::new(stub);
        // Capabilities naming the same command share one child process.
        let mut children: BTreeMap<Vec<String>, Arc<dyn Backend>> = BTreeMap::new();
        let mut backends = BTreeMap::new();
        for (cap, spec) in &settings.backends {
            let backend: Arc<dyn Backend> = match spec {
                BackendSpec::Disabled => continue,
                BackendSpec::Stub => stub.clone(),
                BackendSpec::Subprocess(cmd) => children
                    .entry(cmd.clone())
                    .or_insert_with(|| Arc::new(SubprocessBackend::new(cmd.clone())))
                    .clone(),
                BackendSpec::Http(url) => Arc::new(HttpBackend::new(url.clone())),
            };
            backends.insert(*cap, backend);
        }
        Self::from_backends(
            backends,
            Duration::from_secs_f64(settings.timeout_s),
            settings.retries,
        )
    }

    /// Every capability answered from a recorded cassette.
    /// Recorded failures are replayed too, so the retry budget covers the
    /// longest run of responses recorded for one request.
    pub fn replay(cassette: Cassette) -> Self {
        let retries = cassette.max_responses_per_request().saturating_sub(1) as u32;
        let replay: Arc<dyn Backend> = Arc::new(ReplayBackend::new(cassette));
        let backends = Capability::ALL.into_iter().map(|c| (c, replay.clone())).collect();
        Self::from_backends(backends, Duration::from_secs_f64(DEFAULT_TIMEOUT_S), retries)
    }

    pub fn from_backends(
        backends: BTreeMap<Capability, Arc<dyn Backend>>,
        timeout: Duration,
        retries: u32,
    ) -> Self {
        AdapterRegistry {
            backends,
            timeout,
            retries,
            next_id: AtomicU64::new(1),
            recorder: None,
        }
    }

    pub fn set_backend(&mut self, capability: Capability, backend: Option<Arc<dyn Backend>>) {
        match backend {
            Some(b) => self.backends.insert(capability, b),
            None => self.backends.remove(&capability),
        };
    }

    /// Start capturing every exchange for [`AdapterRegistry::take_cassette`].
    pub fn record(mut self) -> Self {
        self.recorder = Some(Mutex::new(Cassette::default()));
        self
    }

    pub fn take_cassette(&self) -> Option<Cassette> {
        self.recorder
            .as_ref()
            .map(|r| std::mem::take(&mut *r.lock().expect("recorder poisoned")))
    }

    pub fn is_enabled(&self, capability: Capability) -> bool {
        self.backends.contains_key(&capability)
    }

    pub fn describe(&self, capability: Capability) -> String {
        self.backends
            .get(&capability)
            .map(|b| b.describe())
            .unwrap_or_else(|| "none".to_string())
    }

    pub fn call(&self, capability: Capability, payload: Value) -> Result<Value, AdapterError> {
        self.call_with(capability, payload, |v| Ok(v.clone()))
    }

    /// Sends one request, retrying up to `retries` more times on transport
    /// failure, `ok: false`, a mismatched `request_id`, or a payload that
    /// `parse` rejects.
    pub fn call_with<T>(
        &self,
        capability: Capability,
        payload: Value,
        parse: impl Fn(&Value) -> Result<T, String>,
    ) -> Result<T, AdapterError> {
        let backend = self.backends.get(&capability).ok_or_else(|| AdapterError {
            capability,
            attempts: 0,
            last_error: "capability not configured".to_string(),
        })?;
        let id = self.next_id.fetch_add(1, Ordering::SeqCst);
        let request = AdapterRequest::new(capability, format!("{}-{id:06}", capability.op()), payload);
        let attempts = self.retries + 1;
        let mut last_error = String::new();
        for attempt in 1..=attempts {
            let outcome = backend.exchange(&request, self.timeout);
            if let (Some(recorder), Ok(response)) = (&self.recorder, &outcome) {
                recorder.lock().expect("recorder poisoned").entries.push(CassetteEntry {
                    request: request.clone(),
                    response: response.clone(),
                });
            }
            let result = outcome.and_then(|response| {
                if response.request_id != request.request_id {
                    return Err(format!(
                        "response id `{}` does not echo `{}`",
                        response.request_id, request.request_id
                    ));
                }
                if !response.ok {
                    return Err(response.error.unwrap_or_else(|| "backend reported failure".into()));
                }
                let payload = response.payload.ok_or("response has no payload")?;
                parse(&payload)
            });
            match result {
                Ok(value) => return Ok(value),
                Err(e) => {
                    log::warn!("{capability} attempt {attempt}/{attempts} failed: {e}");
                    last_error = e;
                }
            }
        }
        Err(AdapterError { capability, attempts, last_error })
    }

    pub fn title(&self, text: &str) -> Result<String, AdapterError> {
        self.call_with(Capability::Title, json!({ "text": text }), |p| {
            p.get("title")
                .and_then(Value::as_str)
                .map(str::to_string)
                .ok_or_else(|| "missing `title`".to_string())
        })
    }

    pub fn hier_titles(&self, texts: &[&str]) -> Result<Vec<String>, AdapterError> {
        self.call_with(Capability::HierTitles, json!({ "texts": texts }), |p| {
            serde_json::from_value(p.get("titles").cloned().unwrap_or(Value::Null))
                .map_err(|_| "`titles` must be a list of strings".to_string())
        })
    }

    pub fn embed(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, AdapterError> {
        let count = texts.len();
        self.call_with(Capability::Embed, json!({ "texts": texts }), move |p| {
            let vectors: Vec<Vec<f64>> =
                serde_json::from_value(p.get("vectors").cloned().unwrap_or(Value::Null))
                    .map_err(|_| "`vectors` must be a list of number lists".to_string())?;
            let dim = p.get("dim").and_then(Value::as_u64).ok_or("missing `dim`")? as usize;
            if vectors.len() != count {
                return Err(format!("expected {count} vectors, got {}", vectors.len()));
            }
            if vectors.iter().any(|v| v.len() != dim) {
                return Err(format!("vector length differs from dim {dim}"));
            }
            Ok(vectors.into_iter().map(EmbeddingVector).collect())
        })
    }

    pub fn paraphrase(&self, text: &str, max_chars: usize) -> Result<String, AdapterError> {
        self.call_with(
            Capability::Paraphrase,
            json!({ "text": text, "max_chars": max_chars }),
            |p| {
                p.get("text")
                    .and_then(Value::as_str)
                    .map(str::to_string)
                    .ok_or_else(|| "missing `text`".to_string())
            },
        )
    }

    pub fn classify_definition(&self, text: &str) -> Result<DefinitionLabel, AdapterError> {
        self.call_with(Capability::ClassifyDefinition, json!({ "text": text }), |p| {
            let label = p.get("label").and_then(Value::as_str).ok_or("missing `label`")?;
            let score = p.get("score").and_then(Value::as_f64).ok_or("missing `score`")?;
            if !(0.0..=1.0).contains(&score) {
                return Err(format!("score {score} outside [0, 1]"));
            }
            Ok(DefinitionLabel { is_definition: label == "definition", score })
        })
    }

    pub fn tts(&self, text: &str, voice: &str, rate_wpm: f64) -> Result<SpeechAudio, AdapterError> {
        self.call_with(
            Capability::Tts,
            json!({ "text": text, "voice": voice, "rate_wpm": rate_wpm }),
            |p| {
                let duration_s = p
                    .get("duration_s")
                    .and_then(Value::as_f64)
                    .filter(|d| d.is_finite() && *d >= 0.0)
                    .ok_or("missing or invalid `duration_s`")?;
                let audio_path = p.get("audio_path").and_then(Value::as_str).map(str::to_string);
                Ok(SpeechAudio { audio_path, duration_s })
            },
        )
    }
}

/// Serves `backend` over JSON lines until `input` ends: one response line
/// per request line, in order. Malformed lines get an `ok: false` reply.
pub fn serve(backend: &StubBackend, input: impl BufRead, mut output: impl Write) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = match serde_json::from_str::<AdapterRequest>(&line) {
            Ok(req) if req.proto != PROTO_VERSION => {
                AdapterResponse::failure(&req.request_id, format!("unsupported proto `{}`", req.proto))
            }
            Ok(req) => backend.handle(&req),
            Err(e) => {
                let id = serde_json::from_str::<Value>(&line)
                    .ok()
                    .and_then(|v| v.get("request_id").and_then(Value::as_str).map(str::to_string))
                    .unwrap_or_default();
                AdapterResponse::failure(&id, format!("bad request: {e}"))
            }
        };
        writeln!(output, "{}", serde_json::to_string(&response)?)?;
        output.flush()?;
    }
    Ok(())
}
