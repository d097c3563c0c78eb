//! Recorded adapter traffic. A cassette is a JSON-lines file of
//! `{"request": .., "response": ..}` pairs; replay matches on op and payload
//! and serves responses in recorded order.

use std::collections::{HashMap, VecDeque};
use std::fs;
use std::io;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::protocol::{AdapterRequest, AdapterResponse};
use super::Backend;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CassetteEntry {
    pub request: AdapterRequest,
    pub response: AdapterResponse,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Cassette {
    pub entries: Vec<CassetteEntry>,
}

impl Cassette {
    pub fn load(path: &Path) -> io::Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    pub fn parse(content: &str) -> io::Result<Self> {
        let entries = content
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                serde_json::from_str(l).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
            })
            .collect::<io::Result<Vec<_>>>()?;
        Ok(Cassette { entries })
    }

    pub fn to_jsonl(&self) -> String {
        self.entries
            .iter()
            .map(|e| serde_json::to_string(e).expect("cassette entry serializes") + "\n")
            .collect()
    }

    pub fn save(&self, path: &Path) -> io::Result<()> {
        fs::write(path, self.to_jsonl())
    }

    pub fn max_responses_per_request(&self) -> usize {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for e in &self.entries {
            *counts.entry(match_key(&e.request)).or_default() += 1;
        }
        counts.into_values().max().unwrap_or(0)
    }
}

fn match_key(request: &AdapterRequest) -> String {
    format!("{}\n{}", request.op, request.payload)
}

pub struct ReplayBackend {
    queues: Mutex<HashMap<String, VecDeque<AdapterResponse>>>,
}

impl ReplayBackend {
    pub fn new(cassette: Cassette) -> Self {
        let mut queues: HashMap<String, VecDeque<AdapterResponse>> = HashMap::new();
        for entry in cassette.entries {
            queues
                .entry(match_key(&entry.request))
                .or_default()
                .push_back(entry.response);
        }
        ReplayBackend { queues: Mutex::new(queues) }
    }
}

impl Backend for ReplayBackend {
    fn exchange(&self, request: &AdapterRequest, _timeout: Duration) -> Result<AdapterResponse, String> {
        let mut queues = self.queues.lock().expect("replay state poisoned");
        let mut response = queues
            .get_mut(&match_key(request))
            .and_then(VecDeque::pop_front)
            .ok_or_else(|| format!("no recorded response for op `{}`", request.op))?;
        response.request_id = request.request_id.clone();
        Ok(response)
    }

    fn describe(&self) -> String {
        "replay".to_string()
    }
}
