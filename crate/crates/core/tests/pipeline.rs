use std::path::PathBuf;

use trailerforge::adapters::{AdapterRegistry, Capability};
use trailerforge::composition::{Template, Transition};
use trailerforge::corpus::load_manifest;
use trailerforge::fragments::FragmentKind;
use trailerforge::{compile, CompileOptions, Compiled, PipelineError};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn template(name: &str) -> Template {
    Template::load(&root().join("templates").join(name)).unwrap()
}

fn run(manifest: &str, tpl: &str, seed: u64) -> Compiled {
    let (pathway, creator) = load_manifest(&root().join("fixtures/ml-foundations").join(manifest)).unwrap();
    let options = CompileOptions { seed, ..CompileOptions::default() };
    compile(&pathway, &creator, &template(tpl), &AdapterRegistry::stubs(), &options).unwrap()
}

fn kinds(c: &Compiled) -> Vec<FragmentKind> {
    c.storyboard.fragments.iter().map(|f| f.kind).collect()
}

#[test]
fn sample_pathway_with_t1() {
    let c = run("pathway.json", "t1.json", 0);
    assert_eq!(kinds(&c), FragmentKind::ALL.to_vec());
    assert!(c.storyboard.frames().all(|f| f.duration_s >= 2.0));
}

#[test]
fn splash_last_and_minimal_fixtures() {
    let c = run("pathway-splash-last.json", "t1.json", 0);
    let k = kinds(&c);
    assert_eq!(k.first(), Some(&FragmentKind::TrailerTitle));
    assert_eq!(k.last(), Some(&FragmentKind::Splash));

    let c = run("pathway-minimal.json", "t1.json", 0);
    assert_eq!(
        kinds(&c),
        vec![
            FragmentKind::TrailerTitle,
            FragmentKind::Outline,
            FragmentKind::MetaInformation,
            FragmentKind::CallToAction
        ]
    );
    assert_eq!(c.storyboard.trailer_title, "Machine Learning Foundations");
}

#[test]
fn multi_frame_outline_template() {
    let c = run("pathway.json", "t2.json", 0);
    let outline = c.storyboard.fragments.iter().find(|f| f.kind == FragmentKind::Outline).unwrap();
    let ids: Vec<&str> = outline.frames.iter().map(|f| f.frame_id.as_str()).collect();
    assert_eq!(ids, ["outline_a", "outline_b"]);
    for frame in &outline.frames {
        assert_eq!(frame.frame_spec.transition, Transition::Fade);
        // 1.5 s fades never exceed the frame
        assert!(frame.fade_in_s + frame.fade_out_s <= frame.duration_s + 1e-9);
    }
    // two authors, two shown
    let author = c.storyboard.frames().find(|f| f.frame_id == "author").unwrap();
    assert_eq!(author.resolved_elements["author_name"], "Maya Lindqvist and Tomas Okafor");
}

#[test]
fn same_inputs_same_bytes() {
    let a = run("pathway.json", "t1.json", 7);
    let b = run("pathway.json", "t1.json", 7);
    assert_eq!(a.storyboard_json(), b.storyboard_json());
    assert_eq!(a.renderplan_json(), b.renderplan_json());
    assert_eq!(a.subtitles_srt(), b.subtitles_srt());
    assert_eq!(a.storyboard.audit.seed, 7);
}

#[test]
fn replay_reproduces_recording() {
    let (pathway, creator) = load_manifest(&root().join("fixtures/ml-foundations/pathway.json")).unwrap();
    let tpl = template("t1.json");
    let options = CompileOptions::default();
    let recording = AdapterRegistry::stubs().record();
    let first = compile(&pathway, &creator, &tpl, &recording, &options).unwrap();
    let cassette = recording.take_cassette().unwrap();
    assert!(!cassette.entries.is_empty());
    let replayed = compile(&pathway, &creator, &tpl, &AdapterRegistry::replay(cassette), &options).unwrap();
    assert_eq!(first.storyboard_json(), replayed.storyboard_json());
}

#[test]
fn template_without_outline_is_mismatch() {
    let (pathway, creator) = load_manifest(&root().join("fixtures/ml-foundations/pathway.json")).unwrap();
    let mut tpl = template("t1.json");
    tpl.fragment_specs.remove(&FragmentKind::Outline);
    let err = compile(&pathway, &creator, &tpl, &AdapterRegistry::stubs(), &CompileOptions::default()).unwrap_err();
    assert_eq!(err.kind(), "TemplateMismatch");
}

#[test]
fn missing_embeddings_fail_the_run() {
    let (pathway, creator) = load_manifest(&root().join("fixtures/ml-foundations/pathway.json")).unwrap();
    let mut adapters = AdapterRegistry::stubs();
    adapters.set_backend(Capability::Embed, None);
    let err = compile(&pathway, &creator, &template("t1.json"), &adapters, &CompileOptions::default()).unwrap_err();
    assert!(matches!(err, PipelineError::Selection(_)));
    assert_eq!(err.kind(), "AdapterFailure");
}

#[test]
fn no_speech_backend_falls_back_to_estimates() {
    let (pathway, creator) = load_manifest(&root().join("fixtures/ml-foundations/pathway.json")).unwrap();
    let mut adapters = AdapterRegistry::stubs();
    adapters.set_backend(Capability::Tts, None);
    let c = compile(&pathway, &creator, &template("t1.json"), &adapters, &CompileOptions::default()).unwrap();
    assert!(c.storyboard.frames().all(|f| f.voiceover.audio_ref.is_none() && f.voiceover.audio_duration_s.is_none()));
    // stub speech equals the estimate, so timings match the default run
    assert_eq!(c.storyboard.total_duration_s, run("pathway.json", "t1.json", 0).storyboard.total_duration_s);
}

#[test]
fn accepted_paraphrase_reaches_the_outline() {
    let (pathway, creator) = load_manifest(&root().join("fixtures/ml-foundations/pathway.json")).unwrap();
    let mut options = CompileOptions::default();
    options.apply_override("outline_max_chars", "20").unwrap();
    let adapters = AdapterRegistry::stubs();
    let first = compile(&pathway, &creator, &template("t1.json"), &adapters, &options).unwrap();
    let mut offered = first
        .suggestions
        .iter()
        .find(|s| s.kind == trailerforge::fragments::SuggestionKind::Paraphrase)
        .unwrap()
        .clone();
    let outline_text = |c: &Compiled| -> Vec<String> {
        let frame = c.storyboard.frames().find(|f| f.frame_id == "outline").unwrap();
        frame.resolved_elements.values().cloned().collect()
    };
    assert!(!outline_text(&first).contains(&offered.proposed));
    offered.accepted = true;
    offered.proposed = "Ensembles".into();
    options.accepted = vec![offered];
    let second = compile(&pathway, &creator, &template("t1.json"), &adapters, &options).unwrap();
    assert!(outline_text(&second).contains(&"Ensembles".to_string()));
}

#[test]
fn overrides_are_checked() {
    let mut o = CompileOptions::default();
    assert!(o.apply_override("tf_threshold", "0.02").is_ok());
    assert_eq!(o.tf_threshold, 0.02);
    assert!(o.apply_override("speaking_rate_wpm", "-3").is_err());
    assert!(o.apply_override("colour", "blue").is_err());
}
