//! Deterministic in-process backends for every capability.

use std::sync::Arc;
use std::time::Duration;

use serde_json::{json, Value};

use super::protocol::{AdapterRequest, AdapterResponse, Capability};
use super::Backend;
use crate::composition::{estimate_speech_duration, DEFAULT_SPEAKING_RATE_WPM};
use crate::fragments::{looks_like_definition, truncate_at_word};
use crate::textmetrics::{tokenize, StopWords, TfIdfModel};

const TITLE_WORDS: usize = 6;

#[derive(Debug, Clone)]
pub struct StubBackend {
    stopwords: Arc<StopWords>,
    speaking_rate_wpm: f64,
}

impl Default for StubBackend {
    fn default() -> Self {
        Self::new(Arc::new(StopWords::english()), DEFAULT_SPEAKING_RATE_WPM)
    }
}

impl StubBackend {
    pub fn new(stopwords: Arc<StopWords>, speaking_rate_wpm: f64) -> Self {
        StubBackend { stopwords, speaking_rate_wpm }
    }

    /// First six content tokens, title-cased. Falls back to the first six
    /// tokens when the text has no content words.
    pub fn title_for(&self, text: &str) -> String {
        let tokens = tokenize(text);
        let mut words: Vec<&str> = tokens
            .iter()
            .map(String::as_str)
            .filter(|t| !self.stopwords.contains(t))
            .take(TITLE_WORDS)
            .collect();
        if words.is_empty() {
            words = tokens.iter().map(String::as_str).take(TITLE_WORDS).collect();
        }
        if words.is_empty() {
            return "Untitled".to_string();
        }
        words.iter().map(|w| title_case(w)).collect::<Vec<_>>().join(" ")
    }

    pub fn handle(&self, request: &AdapterRequest) -> AdapterResponse {
        match self.dispatch(request) {
            Ok(payload) => AdapterResponse::success(&request.request_id, payload),
            Err(e) => AdapterResponse::failure(&request.request_id, e),
        }
    }

    fn dispatch(&self, request: &AdapterRequest) -> Result<Value, String> {
        let cap = Capability::from_op(&request.op)
            .ok_or_else(|| format!("unknown op `{}`", request.op))?;
        let p = &request.payload;
        match cap {
            Capability::Title => Ok(json!({ "title": self.title_for(str_field(p, "text")?) })),
            Capability::HierTitles => {
                let texts = str_list(p, "texts")?;
                let joined = texts
                    .iter()
                    .map(|t| first_paragraph(t))
                    .collect::<Vec<_>>()
                    .join("\n");
                Ok(json!({ "titles": [self.title_for(&joined)] }))
            }
            Capability::Embed => {
                let texts = str_list(p, "texts")?;
                let docs: Vec<Vec<String>> = texts.iter().map(|t| tokenize(t)).collect();
                let model = TfIdfModel::fit(&docs).map_err(|e| e.to_string())?;
                let vectors: Vec<Vec<f64>> =
                    docs.iter().map(|d| model.embed_tokens(d).0).collect();
                Ok(json!({ "vectors": vectors, "dim": model.dim() }))
            }
            Capability::Paraphrase => {
                let text = str_field(p, "text")?;
                let max = p.get("max_chars").and_then(Value::as_u64).unwrap_or(80) as usize;
                Ok(json!({ "text": truncate_at_word(text, max) }))
            }
            Capability::ClassifyDefinition => {
                let is_def = looks_like_definition(str_field(p, "text")?);
                Ok(json!({
                    "label": if is_def { "definition" } else { "non_definition" },
                    "score": if is_def { 1.0 } else { 0.0 },
                }))
            }
            Capability::Tts => {
                let text = str_field(p, "text")?;
                let rate = p
                    .get("rate_wpm")
                    .and_then(Value::as_f64)
                    .unwrap_or(self.speaking_rate_wpm);
                Ok(json!({
                    "audio_path": Value::Null,
                    "duration_s": estimate_speech_duration(text, rate),
                }))
            }
        }
    }
}

impl Backend for StubBackend {
    fn exchange(&self, request: &AdapterRequest, _timeout: Duration) -> Result<AdapterResponse, String> {
        Ok(self.handle(request))
    }

    fn describe(&self) -> String {
        "stub".to_string()
    }
}

fn title_case(word: &str) -> String {
    let mut chars = word.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn first_paragraph(text: &str) -> &str {
    text.trim_start().split("\n\n").next().unwrap_or("")
}

fn str_field<'a>(payload: &'a Value, key: &str) -> Result<&'a str, String> {
    payload
        .get(key)
        .and_then(Value::as_str)
        .ok_or_else(|| format!("payload field `{key}` must be a string"))
}

fn str_list<'a>(payload: &'a Value, key: &str) -> Result<Vec<&'a str>, String> {
    payload
        .get(key)
        .and_then(Value::as_array)
        .ok_or_else(|| format!("payload field `{key}` must be a list"))?
        .iter()
        .map(|v| v.as_str().ok_or_else(|| format!("`{key}` entries must be strings")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(op: &str, payload: Value) -> AdapterRequest {
        AdapterRequest {
            proto: "v1".into(),
            op: op.into(),
            request_id: "t-1".into(),
            payload,
        }
    }

    #[test]
    fn title_stub_drops_stopwords() {
        let stub = StubBackend::default();
        assert_eq!(
            stub.title_for("the quick brown fox jumps over the lazy dog again"),
            "Quick Brown Fox Jumps Over Lazy"
        );
        assert_eq!(stub.title_for(""), "Untitled");
    }

    #[test]
    fn hier_stub_titles_joined_first_paragraphs() {
        let stub = StubBackend::default();
        let texts = ["Linear Models\n\nbody text", "Kernels\n\nmore text"];
        let resp = stub.handle(&req("hier_titles", json!({ "texts": texts })));
        assert_eq!(resp.payload.unwrap()["titles"], json!(["Linear Models Kernels"]));
    }

    #[test]
    fn tts_stub_uses_estimate() {
        let stub = StubBackend::default();
        let text = vec!["word"; 25].join(" ");
        let resp = stub.handle(&req("tts", json!({"text": text, "voice": "en-f-1"})));
        assert!(resp.ok);
        let payload = resp.payload.unwrap();
        assert_eq!(payload["duration_s"], json!(10.0));
        assert!(payload["audio_path"].is_null());
    }

    #[test]
    fn embed_stub_is_deterministic() {
        let stub = StubBackend::default();
        let r = req("embed", json!({"texts": ["alpha beta", "beta gamma"]}));
        let a = stub.handle(&r);
        assert_eq!(a, stub.handle(&r));
        let payload = a.payload.unwrap();
        assert_eq!(payload["dim"], json!(3));
        assert_eq!(payload["vectors"].as_array().unwrap().len(), 2);
    }

    #[test]
    fn malformed_payload_is_error_response() {
        let stub = StubBackend::default();
        let resp = stub.handle(&req("title", json!({"txt": "x"})));
        assert!(!resp.ok);
        assert_eq!(resp.request_id, "t-1");
        assert!(!stub.handle(&req("nope", json!({}))).ok);
    }
}
