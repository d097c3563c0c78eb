use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use serde_json::Value;
use trailerforge::adapters::{
    serve, AdapterRegistry, AdapterRequest, AdapterResponse, Backend, Capability, HttpBackend, StubBackend,
    SubprocessBackend,
};

fn fixture(name: &str) -> String {
    std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/protocol").join(name)).unwrap()
}

/// Schema of a successful payload per op.
fn conforms(op: &str, request: &Value, payload: &Value) -> Result<(), String> {
    let string = |k: &str| payload.get(k).and_then(Value::as_str).ok_or(format!("{op}: `{k}` not a string"));
    match op {
        "title" | "paraphrase" => {
            string(if op == "title" { "title" } else { "text" })?;
        }
        "hier_titles" => {
            let titles = payload["titles"].as_array().ok_or("titles not a list")?;
            if titles.is_empty() || titles.iter().any(|t| !t.is_string()) {
                return Err("titles must be non-empty strings".into());
            }
        }
        "embed" => {
            let dim = payload["dim"].as_u64().ok_or("dim missing")? as usize;
            let vectors = payload["vectors"].as_array().ok_or("vectors missing")?;
            if vectors.len() != request["texts"].as_array().map_or(0, Vec::len) {
                return Err("one vector per text".into());
            }
            for v in vectors {
                let v = v.as_array().ok_or("vector not a list")?;
                if v.len() != dim || v.iter().any(|x| !x.is_number()) {
                    return Err("vector shape".into());
                }
            }
        }
        "classify_definition" => {
            let label = string("label")?;
            if label != "definition" && label != "non_definition" {
                return Err(format!("label {label}"));
            }
            let score = payload["score"].as_f64().ok_or("score missing")?;
            if !(0.0..=1.0).contains(&score) {
                return Err("score outside [0, 1]".into());
            }
        }
        "tts" => {
            if !(payload["audio_path"].is_null() || payload["audio_path"].is_string()) {
                return Err("audio_path".into());
            }
            if payload["duration_s"].as_f64().is_none_or(|d| d < 0.0) {
                return Err("duration_s".into());
            }
        }
        other => return Err(format!("unknown op {other}")),
    }
    Ok(())
}

fn requests() -> Vec<AdapterRequest> {
    fixture("requests.jsonl").lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn fixture_covers_every_op() {
    let ops: Vec<String> = requests().into_iter().map(|r| r.op).collect();
    for cap in Capability::ALL {
        assert!(ops.iter().any(|o| o == cap.op()), "no fixture request for {cap}");
    }
}

#[test]
fn stubs_conform_and_match_recording() {
    let mut out = Vec::new();
    serve(&StubBackend::default(), fixture("requests.jsonl").as_bytes(), &mut out).unwrap();
    let out = String::from_utf8(out).unwrap();
    assert_eq!(out, fixture("responses.jsonl"));
    for (req, line) in requests().iter().zip(out.lines()) {
        let resp: AdapterResponse = serde_json::from_str(line).unwrap();
        assert_eq!(resp.request_id, req.request_id);
        assert!(resp.ok);
        conforms(&req.op, &req.payload, resp.payload.as_ref().unwrap()).unwrap();
    }
}

#[test]
fn every_request_carries_proto_v1() {
    for req in requests() {
        assert_eq!(req.proto, "v1");
        let v = serde_json::to_value(&req).unwrap();
        assert_eq!(v["proto"], "v1");
    }
}

/// Minimal HTTP/1.1 responder: one request per connection.
fn http_server(status: u16, answer: impl Fn(AdapterRequest) -> AdapterResponse + Send + 'static) -> (String, Arc<AtomicUsize>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}/adapter", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { break };
            counter.fetch_add(1, Ordering::SeqCst);
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some((k, v)) = line.split_once(':') {
                    if k.eq_ignore_ascii_case("content-length") {
                        length = v.trim().parse().unwrap();
                    }
                }
            }
            let mut body = vec![0; length];
            reader.read_exact(&mut body).unwrap();
            let request: AdapterRequest = serde_json::from_slice(&body).unwrap();
            let reply = serde_json::to_string(&answer(request)).unwrap();
            let _ = write!(
                stream,
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                reply.len()
            );
        }
    });
    (url, hits)
}

#[test]
fn http_backend_round_trip() {
    let stub = StubBackend::default();
    let (url, hits) = http_server(200, move |req| stub.handle(&req));
    let mut reg = AdapterRegistry::stubs();
    reg.set_backend(Capability::Title, Some(Arc::new(HttpBackend::new(url))));
    assert_eq!(reg.title("the quick brown fox jumps over the lazy dog").unwrap(), "Quick Brown Fox Jumps Over Lazy");
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}

#[test]
fn http_errors_exhaust_retries() {
    let (url, hits) = http_server(500, |req| AdapterResponse::failure(&req.request_id, "overloaded"));
    let mut map = std::collections::BTreeMap::new();
    map.insert(Capability::Embed, Arc::new(HttpBackend::new(url)) as Arc<dyn Backend>);
    let reg = AdapterRegistry::from_backends(map, Duration::from_secs(2), 2);
    let err = reg.embed(&["a"]).unwrap_err();
    assert_eq!(err.attempts, 3);
    assert_eq!(err.capability, Capability::Embed);
    assert_eq!(hits.load(Ordering::SeqCst), 3);
}

#[test]
fn wrong_request_id_is_rejected() {
    let (url, _) = http_server(200, |req| AdapterResponse::success(&format!("{}-x", req.request_id), serde_json::json!({"title": "t"})));
    let mut map = std::collections::BTreeMap::new();
    map.insert(Capability::Title, Arc::new(HttpBackend::new(url)) as Arc<dyn Backend>);
    let err = AdapterRegistry::from_backends(map, Duration::from_secs(2), 0).title("x").unwrap_err();
    assert!(err.last_error.contains("echo"), "{}", err.last_error);
}

#[test]
fn silent_child_times_out_per_attempt() {
    let mut map = std::collections::BTreeMap::new();
    let child = SubprocessBackend::new(vec!["sleep".into(), "30".into()]);
    map.insert(Capability::Title, Arc::new(child) as Arc<dyn Backend>);
    let reg = AdapterRegistry::from_backends(map, Duration::from_millis(200), 1);
    let start = Instant::now();
    let err = reg.title("x").unwrap_err();
    assert_eq!(err.attempts, 2);
    assert!(start.elapsed() < Duration::from_secs(5));
}

#[test]
fn missing_child_program_is_adapter_failure() {
    let mut map = std::collections::BTreeMap::new();
    let child = SubprocessBackend::new(vec!["/nonexistent/bridge".into()]);
    map.insert(Capability::Title, Arc::new(child) as Arc<dyn Backend>);
    let err = AdapterRegistry::from_backends(map, Duration::from_millis(200), 0).title("x").unwrap_err();
    assert_eq!(err.attempts, 1);
}
