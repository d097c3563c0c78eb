use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const PROTO_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Capability {
    Title,
    HierTitles,
    Embed,
    Paraphrase,
    ClassifyDefinition,
    Tts,
}

impl Capability {
    pub const ALL: [Capability; 6] = [
        Capability::Title,
        Capability::HierTitles,
        Capability::Embed,
        Capability::Paraphrase,
        Capability::ClassifyDefinition,
        Capability::Tts,
    ];

    /// Wire op name; also the key in `adapters.json`.
    pub fn op(self) -> &'static str {
        match self {
            Capability::Title => "title",
            Capability::HierTitles => "hier_titles",
            Capability::Embed => "embed",
            Capability::Paraphrase => "paraphrase",
            Capability::ClassifyDefinition => "classify_definition",
            Capability::Tts => "tts",
        }
    }

    pub fn from_op(op: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.op() == op)
    }
}

impl fmt::Display for Capability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.op())
    }
}

/// One JSON line sent to a backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterRequest {
    pub proto: String,
    pub op: String,
    pub request_id: String,
    pub payload: Value,
}

impl AdapterRequest {
    pub fn new(capability: Capability, request_id: String, payload: Value) -> Self {
        AdapterRequest {
            proto: PROTO_VERSION.to_string(),
            op: capability.op().to_string(),
            request_id,
            payload,
        }
    }
}

/// One JSON line read back. Exactly one of `payload` / `error` is
/// meaningful, selected by `ok`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterResponse {
    pub request_id: String,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl AdapterResponse {
    pub fn success(request_id: &str, payload: Value) -> Self {
        AdapterResponse {
            request_id: request_id.to_string(),
            ok: true,
            payload: Some(payload),
            error: None,
        }
    }

    pub fn failure(request_id: &str, error: impl Into<String>) -> Self {
        AdapterResponse {
            request_id: request_id.to_string(),
            ok: false,
            payload: None,
            error: Some(error.into()),
        }
    }
}
