use std::collections::BTreeMap;
use std::thread;

use serde::{Deserialize, Serialize};

use super::grammar::{expand_grammar, missing_slot, select_grammar};
use super::srt::{build_cues, seconds_to_ms, SubtitleCue};
use super::template::{FrameSpec, Template};
use super::timing::{ms_to_s, sync_durations, synthesize_voice, SpeakerProfile, VoiceOverLine};
use super::CompositionError;
use crate::adapters::AdapterRegistry;
use crate::fragments::{FragmentData, FragmentKind, Payload, Suggestion, TrailerTitleCandidates};
use crate::selection::{BinRecord, FilterOutcome};

pub const STORYBOARD_VERSION: &str = "storyboard/v1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryFrame {
    pub frame_id: String,
    pub frame_spec: FrameSpec,
    pub resolved_elements: BTreeMap<String, String>,
    pub start_s: f64,
    pub duration_s: f64,
    pub fade_in_s: f64,
    pub fade_out_s: f64,
    pub voiceover: VoiceOverLine,
}

impl StoryFrame {
    pub fn start_ms(&self) -> u64 {
        seconds_to_ms(self.start_s)
    }

    pub fn duration_ms(&self) -> u64 {
        seconds_to_ms(self.duration_s)
    }

    pub fn end_ms(&self) -> u64 {
        self.start_ms() + self.duration_ms()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoryFragment {
    pub kind: FragmentKind,
    pub frames: Vec<StoryFrame>,
    /// Only suggestions the creator accepted.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub suggestions: Vec<Suggestion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrammarChoice {
    pub frame_id: String,
    /// Index into the frame's full rule list.
    pub rule_index: usize,
    /// Rules whose slots all had content; the draw was uniform over these.
    pub fillable_rules: Vec<usize>,
    pub pattern: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeechFailure {
    pub frame_id: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Audit {
    pub seed: u64,
    pub filter_outcomes: Vec<FilterOutcome>,
    pub outline_bins: Vec<BinRecord>,
    pub title_selection: Option<TrailerTitleCandidates>,
    pub chosen_grammars: Vec<GrammarChoice>,
    pub speech_failures: Vec<SpeechFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Storyboard {
    pub version: String,
    pub template_id: String,
    pub trailer_title: String,
    pub total_duration_s: f64,
    pub fragments: Vec<StoryFragment>,
    pub audit: Audit,
    pub subtitles: Vec<SubtitleCue>,
}

impl Storyboard {
    pub fn frames(&self) -> impl Iterator<Item = &StoryFrame> {
        self.fragments.iter().flat_map(|f| f.frames.iter())
    }

    pub fn total_duration_ms(&self) -> u64 {
        seconds_to_ms(self.total_duration_s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComposeOptions {
    pub seed: u64,
    pub speaker: SpeakerProfile,
}

fn resolve_elements(frame: &FrameSpec, fields: &BTreeMap<String, String>) -> BTreeMap<String, String> {
    frame
        .elements
        .iter()
        .filter_map(|e| {
            let content = e.text.clone().or_else(|| fields.get(e.binding()).cloned())?;
            Some((e.id.clone(), content))
        })
        .collect()
}

struct Pending<'a> {
    kind: FragmentKind,
    spec: &'a FrameSpec,
    elements: BTreeMap<String, String>,
    line: VoiceOverLine,
}

/// Resolves every frame of the timeline against the template: element
/// content, one grammar per frame, narration, timing and subtitles.
/// `audit` carries the upstream selection record; grammar and speech
/// entries are appended here.
pub fn assemble_storyboard(
    timeline: &[FragmentData],
    template: &Template,
    adapters: &AdapterRegistry,
    options: &ComposeOptions,
    mut audit: Audit,
) -> Result<Storyboard, CompositionError> {
    audit.seed = options.seed;
    let mut pending = Vec::new();
    for fragment in timeline {
        let spec = template
            .fragment_specs
            .get(&fragment.kind)
            .ok_or(CompositionError::TemplateMismatch(fragment.kind))?;
        let fields = fragment.fields();
        let per_frame: Vec<BTreeMap<String, String>> =
            spec.frames.iter().map(|f| resolve_elements(f, &fields)).collect();
        // grammars may name any element of the fragment, nearest frame first
        for (frame, elements) in spec.frames.iter().zip(&per_frame) {
            let mut visible = elements.clone();
            for other in &per_frame {
                for (k, v) in other {
                    visible.entry(k.clone()).or_insert_with(|| v.clone());
                }
            }
            let rules = spec.grammars_for(frame);
            let text = if rules.is_empty() {
                String::new()
            } else {
                let fillable: Vec<usize> = (0..rules.len())
                    .filter(|&i| missing_slot(&rules[i], &visible).is_none())
                    .collect();
                if fillable.is_empty() {
                    let slot = missing_slot(&rules[0], &visible).unwrap_or_default();
                    return Err(CompositionError::UnfilledSlot(format!("{slot} (frame {})", frame.id)));
                }
                let candidates: Vec<_> = fillable.iter().map(|&i| rules[i].clone()).collect();
                let pick = select_grammar(&candidates, options.seed, &frame.id)?;
                let rule_index = fillable[pick];
                audit.chosen_grammars.push(GrammarChoice {
                    frame_id: frame.id.clone(),
                    rule_index,
                    fillable_rules: fillable,
                    pattern: rules[rule_index].pattern.clone(),
                });
                expand_grammar(&rules[rule_index], &visible)?
            };
            pending.push(Pending {
                kind: fragment.kind,
                spec: frame,
                elements: elements.clone(),
                line: VoiceOverLine::new(&frame.id, text, options.speaker.rate_wpm),
            });
        }
    }

    // frames are independent, so synthesis runs concurrently
    let voiced: Vec<(VoiceOverLine, Option<String>)> = thread::scope(|s| {
        let handles: Vec<_> = pending
            .iter()
            .map(|p| {
                let line = p.line.clone();
                s.spawn(move || synthesize_voice(line, adapters, &options.speaker))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("speech worker panicked")).collect()
    });

    let lines: Vec<(&VoiceOverLine, _)> = voiced
        .iter()
        .zip(&pending)
        .map(|((line, _), p)| (line, p.spec.transition))
        .collect();
    let timings = sync_durations(&lines, &template.constraints, &template.animation);

    let mut fragments: Vec<StoryFragment> = Vec::new();
    let mut clock_ms = 0u64;
    for ((p, (line, failure)), timing) in pending.into_iter().zip(voiced).zip(timings) {
        if let Some(error) = failure {
            audit.speech_failures.push(SpeechFailure { frame_id: line.frame_id.clone(), error });
        }
        let frame = StoryFrame {
            frame_id: p.spec.id.clone(),
            frame_spec: p.spec.clone(),
            resolved_elements: p.elements,
            start_s: ms_to_s(clock_ms),
            duration_s: ms_to_s(timing.duration_ms),
            fade_in_s: timing.fade_in_s,
            fade_out_s: timing.fade_out_s,
            voiceover: line,
        };
        clock_ms += timing.duration_ms;
        match fragments.last_mut() {
            Some(f) if f.kind == p.kind => f.frames.push(frame),
            _ => fragments.push(StoryFragment { kind: p.kind, frames: vec![frame], suggestions: Vec::new() }),
        }
    }
    for (story, fragment) in fragments.iter_mut().zip(timeline) {
        story.suggestions = fragment.suggestions.iter().filter(|s| s.accepted).cloned().collect();
    }

    let trailer_title = timeline
        .iter()
        .find_map(|f| match &f.payload {
            Payload::TrailerTitle { title, .. } => Some(title.clone()),
            _ => None,
        })
        .unwrap_or_default();
    let subtitles = {
        let frames: Vec<&StoryFrame> = fragments.iter().flat_map(|f| f.frames.iter()).collect();
        build_cues(&frames)
    };
    Ok(Storyboard {
        version: STORYBOARD_VERSION.to_string(),
        template_id: template.id.clone(),
        trailer_title,
        total_duration_s: ms_to_s(clock_ms),
        fragments,
        audit,
        subtitles,
    })
}
