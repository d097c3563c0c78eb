use std::collections::BTreeMap;

use trailerforge::adapters::{AdapterRegistry, Backend, Capability};
use trailerforge::adapters::{AdapterRequest, AdapterResponse};
use trailerforge::composition::*;
use trailerforge::fragments::{FragmentData, FragmentKind, Payload, TrailerTitleCandidates};

fn rule(pattern: &str, slots: &[&str]) -> GrammarRule {
    GrammarRule { pattern: pattern.into(), slots: slots.iter().map(|s| s.to_string()).collect() }
}

fn fields(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

fn constraints() -> Constraints {
    Constraints { outline_slots: 5, max_authors_shown: 1, min_frame_s: 2.0, pad_s: 0.5 }
}

#[test]
fn grammar_expansion() {
    let r = rule("Welcome to {trailer_title}!", &["trailer_title"]);
    assert_eq!(
        expand_grammar(&r, &fields(&[("trailer_title", "Machine Learning")])).unwrap(),
        "Welcome to Machine Learning!"
    );
    assert_eq!(
        expand_grammar(&r, &fields(&[])).unwrap_err(),
        CompositionError::UnfilledSlot("trailer_title".into())
    );
    let plain = rule("Let's begin.", &[]);
    assert_eq!(expand_grammar(&plain, &fields(&[])).unwrap(), "Let's begin.");
    let braces = expand_grammar(&r, &fields(&[("trailer_title", "Sets {a, b}")])).unwrap();
    assert!(!braces.contains('{'));
}

#[test]
fn grammar_selection() {
    let one = vec![rule("only", &[])];
    assert_eq!(select_grammar(&one, 42, "title").unwrap(), 0);
    let many: Vec<GrammarRule> = (0..5).map(|i| rule(&format!("r{i}"), &[])).collect();
    assert_eq!(select_grammar(&many, 3, "title").unwrap(), select_grammar(&many, 3, "title").unwrap());
    assert_eq!(select_grammar(&[], 0, "title").unwrap_err(), CompositionError::EmptyGrammarSet("title".into()));
    // every rule is reachable across seeds
    let hit: std::collections::BTreeSet<usize> =
        (0..200).map(|s| select_grammar(&many, s, "title").unwrap()).collect();
    assert_eq!(hit.len(), 5);
}

#[test]
fn speech_estimates() {
    let words = |n: usize| vec!["word"; n].join(" ");
    assert_eq!(estimate_speech_duration(&words(25), 150.0), 10.0);
    assert_eq!(estimate_speech_duration("", 150.0), 0.0);
    assert_eq!(estimate_speech_duration("hello", 150.0), 0.5);
}

fn line(est: f64, audio: Option<f64>) -> VoiceOverLine {
    VoiceOverLine {
        frame_id: "f".into(),
        text: "x".into(),
        est_duration_s: est,
        audio_ref: None,
        audio_duration_s: audio,
    }
}

#[test]
fn duration_sync() {
    let fades = Animation { fade_in_s: 1.5, fade_out_s: 1.5 };
    let c = constraints();
    let long = line(10.0, None);
    let short = line(0.8, None);
    let measured = line(2.0, Some(3.2));
    let t = sync_durations(
        &[(&long, Transition::Cut), (&short, Transition::Fade), (&measured, Transition::Cut)],
        &c,
        &fades,
    );
    assert_eq!(t[0].duration_ms, 10_500);
    assert_eq!(t[1].duration_ms, 2_000);
    assert_eq!((t[1].fade_in_s, t[1].fade_out_s), (1.0, 1.0));
    assert_eq!((t[0].fade_in_s, t[0].fade_out_s), (0.0, 0.0));
    assert_eq!(t[2].duration_ms, 3_700);
    assert_eq!(fit_fades(5.0, 1.0, 2.0), (1.0, 2.0));
}

struct FixedSpeech(f64);

impl Backend for FixedSpeech {
    fn exchange(&self, request: &AdapterRequest, _: std::time::Duration) -> Result<AdapterResponse, String> {
        Ok(AdapterResponse::success(
            &request.request_id,
            serde_json::json!({"audio_path": "audio/f.wav", "duration_s": self.0}),
        ))
    }

    fn describe(&self) -> String {
        "fixed".into()
    }
}

#[test]
fn voice_synthesis_precedence() {
    let profile = SpeakerProfile::default();
    let text = ["word"; 10].join(" ");
    let base = VoiceOverLine::new("f", text, profile.rate_wpm);

    let (stubbed, err) = synthesize_voice(base.clone(), &AdapterRegistry::stubs(), &profile);
    assert!(err.is_none());
    assert_eq!(stubbed.audio_duration_s, Some(stubbed.est_duration_s));
    assert!(stubbed.audio_ref.is_none());

    let mut none = AdapterRegistry::stubs();
    none.set_backend(Capability::Tts, None);
    let (plain, _) = synthesize_voice(base.clone(), &none, &profile);
    assert_eq!(plain, base);

    let mut fixed = AdapterRegistry::stubs();
    fixed.set_backend(Capability::Tts, Some(std::sync::Arc::new(FixedSpeech(3.2))));
    let (measured, _) = synthesize_voice(base, &fixed, &profile);
    assert_eq!(measured.audio_duration_s, Some(3.2));
    assert_eq!(measured.effective_duration_s(), 3.2);
    assert_eq!(measured.audio_ref.as_deref(), Some("audio/f.wav"));
}

fn rect(x: f64, y: f64) -> Rect {
    Rect { x, y, w: 0.2, h: 0.2 }
}

fn tiny_template() -> Template {
    let frame = |id: &str, transition, elements: Vec<ElementSpec>| FrameSpec {
        id: id.into(),
        elements,
        transition,
        grammars: None,
    };
    let text = |id: &str, r| ElementSpec {
        id: id.into(),
        kind: ElementKind::Text,
        position: r,
        style_role: "body".into(),
        bind: None,
        text: None,
    };
    let mut specs = BTreeMap::new();
    specs.insert(
        FragmentKind::TrailerTitle,
        FragmentSpec {
            frames: vec![frame("title", Transition::Fade, vec![text("trailer_title", rect(0.1, 0.1))])],
            grammars: vec![rule("Welcome to {trailer_title}!", &["trailer_title"])],
        },
    );
    specs.insert(
        FragmentKind::CallToAction,
        FragmentSpec {
            frames: vec![frame("cta", Transition::Cut, vec![text("cta_phrase", rect(0.5, 0.5))])],
            grammars: vec![],
        },
    );
    let t = Template {
        id: "tiny".into(),
        fragment_specs: specs,
        style: Style { font_family: "Inter".into(), font_sizes: BTreeMap::new(), colors: BTreeMap::new() },
        animation: Animation { fade_in_s: 0.5, fade_out_s: 0.5 },
        constraints: constraints(),
    };
    t.validate().unwrap();
    t
}

fn title_fragment(title: &str) -> FragmentData {
    FragmentData::new(
        FragmentKind::TrailerTitle,
        Payload::TrailerTitle {
            title: title.into(),
            selection: TrailerTitleCandidates { candidates: vec![], selected: title.into(), fallback_used: false },
        },
    )
}

fn cta_fragment() -> FragmentData {
    FragmentData::new(
        FragmentKind::CallToAction,
        Payload::CallToAction { phrase: "Go".into(), action_label: "Start the course".into(), action_url: None },
    )
}

#[test]
fn storyboard_subtitles_and_render_plan() {
    let template = tiny_template();
    let options = ComposeOptions { seed: 0, speaker: SpeakerProfile::default() };
    let timeline = vec![title_fragment("Machine Learning"), cta_fragment()];
    let board =
        assemble_storyboard(&timeline, &template, &AdapterRegistry::stubs(), &options, Audit::default()).unwrap();
    assert_eq!(board.version, STORYBOARD_VERSION);
    assert_eq!(board.trailer_title, "Machine Learning");
    assert_eq!(board.audit.chosen_grammars.len(), 1);

    // title narration is 4 words: 1.6 s + 0.5 pad = 2.1 s; cta frame is silent
    let srt = render_srt(&board.subtitles);
    assert_eq!(srt, "1\n00:00:00,000 --> 00:00:02,100\nWelcome to Machine Learning!\n\n");
    assert_eq!(board.total_duration_s, 4.1);
    assert_eq!(emit_voiceover(&board), "title\tWelcome to Machine Learning!\ncta\t\n");

    let plan = emit_renderplan(&board, &template);
    assert_eq!(plan.end_s(), board.total_duration_s);
    let fades: Vec<(f64, f64)> = plan
        .instructions
        .iter()
        .filter_map(|i| match i {
            RenderInstruction::Fade { start_s, end_s, .. } => Some((*start_s, *end_s)),
            _ => None,
        })
        .collect();
    assert_eq!(fades, vec![(0.0, 0.5), (1.6, 2.1)]);
    assert!(!plan.instructions.iter().any(|i| matches!(i, RenderInstruction::PlayAudio { .. })));
}

#[test]
fn audio_becomes_play_instruction() {
    let template = tiny_template();
    let mut adapters = AdapterRegistry::stubs();
    adapters.set_backend(Capability::Tts, Some(std::sync::Arc::new(FixedSpeech(3.2))));
    let options = ComposeOptions { seed: 0, speaker: SpeakerProfile::default() };
    let board =
        assemble_storyboard(&[title_fragment("ML"), cta_fragment()], &template, &adapters, &options, Audit::default())
            .unwrap();
    let plan = emit_renderplan(&board, &template);
    let audio: Vec<&RenderInstruction> =
        plan.instructions.iter().filter(|i| matches!(i, RenderInstruction::PlayAudio { .. })).collect();
    assert_eq!(audio.len(), 1);
    assert_eq!(audio[0].start_s(), 0.0);
    assert_eq!(board.frames().next().unwrap().duration_s, 3.7);
}

#[test]
fn unfillable_frame_and_missing_spec() {
    let template = tiny_template();
    let options = ComposeOptions { seed: 0, speaker: SpeakerProfile::default() };
    let empty_title = title_fragment("   ");
    let err = assemble_storyboard(&[empty_title, cta_fragment()], &template, &AdapterRegistry::stubs(), &options, Audit::default())
        .unwrap_err();
    assert!(matches!(err, CompositionError::UnfilledSlot(s) if s.starts_with("trailer_title")));

    let outline = FragmentData::new(FragmentKind::Outline, Payload::Outline { entries: vec![] });
    let err = assemble_storyboard(&[outline], &template, &AdapterRegistry::stubs(), &options, Audit::default())
        .unwrap_err();
    assert_eq!(err, CompositionError::TemplateMismatch(FragmentKind::Outline));
}

#[test]
fn long_narration_splits_by_characters() {
    let text = "one two three four five six seven eight nine ten eleven twelve thirteen fourteen fifteen sixteen";
    let lines = wrap_lines(text, MAX_LINE_CHARS);
    assert_eq!(lines.len(), 3);
    let frame = StoryFrame {
        frame_id: "f".into(),
        frame_spec: FrameSpec { id: "f".into(), elements: vec![], transition: Transition::Cut, grammars: None },
        resolved_elements: BTreeMap::new(),
        start_s: 1.0,
        duration_s: 9.0,
        fade_in_s: 0.0,
        fade_out_s: 0.0,
        voiceover: VoiceOverLine::new("f", text.into(), 150.0),
    };
    let cues = build_cues(&[&frame]);
    assert_eq!(cues.len(), 2);
    let chars = |s: &str| s.chars().filter(|&c| c != '\n').count() as f64;
    let (a, b) = (chars(&cues[0].text), chars(&cues[1].text));
    let split = 1.0 + 9.0 * a / (a + b);
    assert!((cues[0].end_s - split).abs() <= 0.001);
    assert_eq!(cues[0].start_s, 1.0);
    assert_eq!(cues[1].start_s, cues[0].end_s);
    assert_eq!(cues[1].end_s, 10.0);
    assert_eq!((cues[0].index, cues[1].index), (1, 2));
}
