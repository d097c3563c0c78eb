use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

const OUTPUTS: [&str; 5] = ["storyboard.json", "subtitles.srt", "voiceover.txt", "renderplan.json", "wordcloud.json"];

fn core() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core")
}

fn manifest(name: &str) -> PathBuf {
    core().join("fixtures/ml-foundations").join(name)
}

fn template(name: &str) -> PathBuf {
    core().join("templates").join(name)
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_trailerforge"))
}

fn generate(out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("generate")
        .arg("--manifest")
        .arg(manifest("pathway.json"))
        .arg("--template")
        .arg(template("t1.json"))
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn stderr_json(output: &Output) -> Value {
    let text = String::from_utf8_lossy(&output.stderr);
    let line = text.lines().rev().find(|l| l.starts_with('{')).unwrap_or_else(|| panic!("no report in {text}"));
    serde_json::from_str(line).unwrap()
}

#[test]
fn generate_writes_every_output() {
    let dir = TempDir::new().unwrap();
    let out = generate(dir.path(), &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in OUTPUTS {
        assert!(dir.path().join(name).is_file(), "{name} missing");
    }
    let summary = String::from_utf8(out.stdout).unwrap();
    assert!(summary.starts_with("7 fragments"), "{summary}");
}

#[test]
fn missing_manifest_names_the_path() {
    let dir = TempDir::new().unwrap();
    let out = bin()
        .args(["generate", "--manifest", "/nonexistent/pathway.json", "--template"])
        .arg(template("t1.json"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let report = stderr_json(&out);
    assert_eq!(report["error"], "MissingFile");
    assert!(report["message"].as_str().unwrap().contains("/nonexistent/pathway.json"));
    assert!(!dir.path().join("storyboard.json").exists());
}

#[test]
fn renderer_status_is_propagated() {
    let dir = TempDir::new().unwrap();
    let out = generate(dir.path(), &["--render-cmd", "test -f {} && exit 3"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["error"], "RendererError");

    let out = generate(dir.path(), &["--render-cmd", "test -f {}"]);
    assert!(out.status.success());
}

#[test]
fn bad_override_is_rejected() {
    let dir = TempDir::new().unwrap();
    let out = generate(dir.path(), &["--set", "no_such_knob=1"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"], "InvalidOverride");
}

fn validate(manifest: &Path, template: &Path) -> (Option<i32>, Value) {
    let out = bin().arg("validate").arg("--manifest").arg(manifest).arg("--template").arg(template).output().unwrap();
    (out.status.code(), serde_json::from_slice(&out.stdout).unwrap())
}

#[test]
fn validate_clean_pair() {
    for t in ["t1.json", "t2.json"] {
        let (code, findings) = validate(&manifest("pathway.json"), &template(t));
        assert_eq!(code, Some(0));
        assert_eq!(findings, Value::Array(vec![]));
    }
}

#[test]
fn validate_reports_overlapping_elements() {
    let dir = TempDir::new().unwrap();
    let mut t: Value = serde_json::from_str(&fs::read_to_string(template("t1.json")).unwrap()).unwrap();
    t["fragment_specs"]["splash"]["frames"][0]["elements"][1]["position"]["y"] = serde_json::json!(0.3);
    let path = dir.path().join("overlap.json");
    fs::write(&path, t.to_string()).unwrap();

    let (code, findings) = validate(&manifest("pathway.json"), &path);
    assert_eq!(code, Some(1));
    let finding = &findings[0];
    assert_eq!(finding["kind"], "OverlapError");
    let mut elements: Vec<&str> = finding["elements"].as_array().unwrap().iter().map(|e| e.as_str().unwrap()).collect();
    elements.sort();
    assert_eq!(elements, ["splash_logo", "splash_text"]);
}

#[test]
fn validate_assessment_only_pathway() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("q1.txt"), "Which of these is a tree? ".repeat(40)).unwrap();
    fs::write(dir.path().join("q2.txt"), "Which of these is a forest? ".repeat(40)).unwrap();
    let m = serde_json::json!({
        "resources": [
            {"id": "q1", "path": "q1.txt", "kind": "assessment"},
            {"id": "q2", "path": "q2.txt", "kind": "assessment"}
        ]
    });
    let path = dir.path().join("pathway.json");
    fs::write(&path, m.to_string()).unwrap();
    let (code, findings) = validate(&path, &template("t1.json"));
    assert_eq!(code, Some(1));
    assert!(findings.as_array().unwrap().iter().any(|f| f["kind"] == "TooFewEligible"), "{findings}");
}

fn inspect(storyboard: &Path, section: &str) -> Output {
    bin().arg("inspect").arg("--storyboard").arg(storyboard).args(["--section", section]).output().unwrap()
}

#[test]
fn inspect_sections() {
    let dir = TempDir::new().unwrap();
    assert!(generate(dir.path(), &[]).status.success());
    let board = dir.path().join("storyboard.json");

    let timeline = String::from_utf8(inspect(&board, "timeline").stdout).unwrap();
    assert_eq!(timeline.lines().count(), 7);
    assert!(timeline.lines().next().unwrap().contains("splash"));

    let durations = String::from_utf8(inspect(&board, "durations").stdout).unwrap();
    let rows: Vec<Vec<&str>> = durations.lines().skip(1).map(|l| l.split_whitespace().collect()).collect();
    let (total, frames) = rows.split_last().unwrap();
    let sum_ms: i64 = frames.iter().map(|r| (r[2].parse::<f64>().unwrap() * 1000.0).round() as i64).sum();
    assert_eq!(total[0], "total");
    assert_eq!((total[1].parse::<f64>().unwrap() * 1000.0).round() as i64, sum_ms);

    let outline = String::from_utf8(inspect(&board, "outline").stdout).unwrap();
    assert!(outline.starts_with("1. "));
    assert!(!outline.contains("What you will learn"));

    let audit: Value = serde_json::from_slice(&inspect(&board, "audit").stdout).unwrap();
    assert_eq!(audit["seed"], 0);

    assert_eq!(inspect(&board, "colours").status.code(), Some(2));
    assert_eq!(inspect(&dir.path().join("nope.json"), "audit").status.code(), Some(1));
}

#[test]
fn subprocess_backend_end_to_end() {
    let dir = TempDir::new().unwrap();
    let stub_cmd = serde_json::json!([env!("CARGO_BIN_EXE_trailerforge"), "adapter-stub"]);
    let adapters = serde_json::json!({
        "title": {"cmd": stub_cmd}, "hier_titles": {"cmd": stub_cmd}, "embed": {"cmd": stub_cmd},
        "paraphrase": {"cmd": stub_cmd}, "classify_definition": {"cmd": stub_cmd}, "tts": {"cmd": stub_cmd}
    });
    let adapters_path = dir.path().join("adapters.json");
    fs::write(&adapters_path, adapters.to_string()).unwrap();

    let via_child = dir.path().join("child");
    let in_process = dir.path().join("stub");
    let out = generate(&via_child, &["--adapters", adapters_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(generate(&in_process, &[]).status.success());
    for name in OUTPUTS {
        assert_eq!(fs::read(via_child.join(name)).unwrap(), fs::read(in_process.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn record_then_replay() {
    let dir = TempDir::new().unwrap();
    let cassette = dir.path().join("run.cassette.jsonl");
    let first = dir.path().join("a");
    let second = dir.path().join("b");
    assert!(generate(&first, &["--record", cassette.to_str().unwrap()]).status.success());
    assert!(cassette.is_file());
    let out = generate(&second, &["--replay", cassette.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for name in OUTPUTS {
        assert_eq!(fs::read(first.join(name)).unwrap(), fs::read(second.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn suggestions_round_trip() {
    let dir = TempDir::new().unwrap();
    let file = dir.path().join("suggestions.json");
    assert!(generate(&dir.path().join("a"), &["--suggestions", file.to_str().unwrap()]).status.success());
    let mut suggestions: Value = serde_json::from_str(&fs::read_to_string(&file).unwrap()).unwrap();
    let list = suggestions.as_array_mut().unwrap();
    assert!(!list.is_empty());
    list[0]["accepted"] = Value::Bool(true);
    fs::write(&file, suggestions.to_string()).unwrap();
    let out = generate(&dir.path().join("b"), &["--accept", file.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let board: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("b/storyboard.json")).unwrap()).unwrap();
    let accepted: usize = board["fragments"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["suggestions"].as_array().map_or(0, Vec::len))
        .sum();
    assert_eq!(accepted, 1);
}
