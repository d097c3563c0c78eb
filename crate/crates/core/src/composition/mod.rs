//! Template application: slot grammars become narration, narration sets
//! frame durations, and the result is emitted as a storyboard, an SRT
//! subtitle track and a render plan.

mod grammar;
mod renderplan;
mod srt;
mod storyboard;
mod template;
mod timing;

use thiserror::Error;

pub use grammar::{expand_grammar, missing_slot, placeholders, select_grammar};
pub use renderplan::{emit_renderplan, FadeDirection, RenderInstruction, RenderPlan, RENDERPLAN_VERSION};
pub use srt::{build_cues, format_timestamp, render_srt, wrap_lines, SubtitleCue, MAX_CUE_LINES, MAX_LINE_CHARS};
pub use storyboard::{
    assemble_storyboard, Audit, ComposeOptions, GrammarChoice, SpeechFailure, StoryFragment, StoryFrame,
    Storyboard, STORYBOARD_VERSION,
};
pub use template::{
    load_template, Animation, Constraints, ElementKind, ElementSpec, FragmentSpec, FrameSpec, GrammarRule, Rect,
    Style, Template, Transition, DEFAULT_MIN_FRAME_S, DEFAULT_PAD_S,
};
pub use timing::{
    ceil_ms, estimate_speech_duration, fit_fades, frame_duration_ms, ms_to_s, sync_durations, synthesize_voice,
    FrameTiming, SpeakerProfile, VoiceOverLine, DEFAULT_SPEAKING_RATE_WPM, DEFAULT_VOICE, MIN_SPEECH_S,
};

use crate::fragments::FragmentKind;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompositionError {
    #[error("template schema error: {0}")]
    Schema(String),
    #[error("elements `{a}` and `{b}` overlap in frame `{frame}`")]
    Overlap { frame: String, a: String, b: String },
    #[error("grammar slot `{slot}` in fragment `{fragment}` names no element")]
    DanglingSlot { fragment: FragmentKind, slot: String },
    #[error("no grammar rules for frame `{0}`")]
    EmptyGrammarSet(String),
    #[error("slot `{0}` has no content")]
    UnfilledSlot(String),
    #[error("template has no spec for fragment `{0}`")]
    TemplateMismatch(FragmentKind),
}

/// The `voiceover.txt` rows: frame id, a tab, the narration.
pub fn emit_voiceover(storyboard: &Storyboard) -> String {
    storyboard
        .frames()
        .map(|f| format!("{}\t{}\n", f.frame_id, f.voiceover.text))
        .collect()
}
