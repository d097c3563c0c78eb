use serde::{Deserialize, Serialize};

use super::template::{Animation, Constraints, Transition};
use crate::adapters::AdapterRegistry;

pub const DEFAULT_SPEAKING_RATE_WPM: f64 = 150.0;
pub const MIN_SPEECH_S: f64 = 0.5;
pub const DEFAULT_VOICE: &str = "en-f-1";

/// Words over rate, floored at half a second for any non-empty text.
pub fn estimate_speech_duration(text: &str, speaking_rate_wpm: f64) -> f64 {
    assert!(speaking_rate_wpm > 0.0, "speaking rate must be positive");
    let words = text.split_whitespace().count();
    if words == 0 {
        return 0.0;
    }
    (words as f64 / speaking_rate_wpm * 60.0).max(MIN_SPEECH_S)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoiceOverLine {
    pub frame_id: String,
    pub text: String,
    pub est_duration_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audio_duration_s: Option<f64>,
}

impl VoiceOverLine {
    pub fn new(frame_id: &str, text: String, speaking_rate_wpm: f64) -> Self {
        VoiceOverLine {
            frame_id: frame_id.to_string(),
            est_duration_s: estimate_speech_duration(&text, speaking_rate_wpm),
            text,
            audio_ref: None,
            audio_duration_s: None,
        }
    }

    /// Measured audio length when known, else the estimate.
    pub fn effective_duration_s(&self) -> f64 {
        self.audio_duration_s.unwrap_or(self.est_duration_s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeakerProfile {
    pub voice: String,
    pub rate_wpm: f64,
}

impl Default for SpeakerProfile {
    fn default() -> Self {
        SpeakerProfile { voice: DEFAULT_VOICE.to_string(), rate_wpm: DEFAULT_SPEAKING_RATE_WPM }
    }
}

/// Attaches measured audio when the TTS adapter answers. Absence or failure
/// leaves the estimate authoritative; the failure text is returned for the
/// audit.
pub fn synthesize_voice(
    line: VoiceOverLine,
    adapters: &AdapterRegistry,
    profile: &SpeakerProfile,
) -> (VoiceOverLine, Option<String>) {
    if line.text.trim().is_empty() || !adapters.is_enabled(crate::adapters::Capability::Tts) {
        return (line, None);
    }
    match adapters.tts(&line.text, &profile.voice, profile.rate_wpm) {
        Ok(audio) => (
            VoiceOverLine {
                audio_ref: audio.audio_path,
                audio_duration_s: Some(audio.duration_s),
                ..line
            },
            None,
        ),
        Err(e) => {
            log::warn!("speech synthesis failed for frame {}: {e}", line.frame_id);
            (line, Some(e.to_string()))
        }
    }
}

/// Whole milliseconds, rounded up.
pub fn ceil_ms(seconds: f64) -> u64 {
    let ms = seconds * 1000.0;
    // absorb representation noise such as 10.5 * 1000 = 10500.000000000002
    let snapped = (ms * 1e6).round() / 1e6;
    snapped.ceil().max(0.0) as u64
}

pub fn ms_to_s(ms: u64) -> f64 {
    ms as f64 / 1000.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameTiming {
    pub duration_ms: u64,
    pub fade_in_s: f64,
    pub fade_out_s: f64,
}

/// `max(min_frame_s, speech + pad_s)` in whole milliseconds, never below the
/// speech itself.
pub fn frame_duration_ms(line: &VoiceOverLine, constraints: &Constraints) -> u64 {
    let wanted = (line.effective_duration_s() + constraints.pad_s).max(constraints.min_frame_s);
    ceil_ms(wanted).max(ceil_ms(line.effective_duration_s())).max(1)
}

/// Scales both fades down by the same factor when they do not fit.
pub fn fit_fades(duration_s: f64, fade_in_s: f64, fade_out_s: f64) -> (f64, f64) {
    let total = fade_in_s + fade_out_s;
    if total <= duration_s || total <= 0.0 {
        return (fade_in_s, fade_out_s);
    }
    let k = duration_s / total;
    (fade_in_s * k, fade_out_s * k)
}

pub fn sync_durations(
    frames: &[(&VoiceOverLine, Transition)],
    constraints: &Constraints,
    animation: &Animation,
) -> Vec<FrameTiming> {
    frames
        .iter()
        .map(|(line, transition)| {
            let duration_ms = frame_duration_ms(line, constraints);
            let (fade_in_s, fade_out_s) = match transition {
                Transition::Cut => (0.0, 0.0),
                Transition::Fade => fit_fades(ms_to_s(duration_ms), animation.fade_in_s, animation.fade_out_s),
            };
            FrameTiming { duration_ms, fade_in_s, fade_out_s }
        })
        .collect()
}
