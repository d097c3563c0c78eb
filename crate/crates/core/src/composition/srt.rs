use serde::{Deserialize, Serialize};

use super::storyboard::StoryFrame;
use super::timing::ms_to_s;

pub const MAX_LINE_CHARS: usize = 42;
pub const MAX_CUE_LINES: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubtitleCue {
    pub index: usize,
    pub start_s: f64,
    pub end_s: f64,
    /// One or two lines joined by `\n`.
    pub text: String,
}

/// Greedy word wrap; words longer than a line are hard-split.
pub fn wrap_lines(text: &str, width: usize) -> Vec<String> {
    let mut lines = Vec::new();
    let mut current = String::new();
    let mut current_len = 0;
    for word in text.split_whitespace() {
        let mut chars: Vec<char> = word.chars().collect();
        while chars.len() > width {
            if current_len > 0 {
                lines.push(std::mem::take(&mut current));
                current_len = 0;
            }
            lines.push(chars.drain(..width).collect());
        }
        let len = chars.len();
        if len == 0 {
            continue;
        }
        if current_len > 0 && current_len + 1 + len > width {
            lines.push(std::mem::take(&mut current));
            current_len = 0;
        }
        if current_len > 0 {
            current.push(' ');
            current_len += 1;
        }
        current.extend(chars);
        current_len += len;
    }
    if current_len > 0 {
        lines.push(current);
    }
    lines
}

/// Cues for every frame with narration. Each frame's window is divided
/// among its cues in proportion to their character counts.
pub fn build_cues(frames: &[&StoryFrame]) -> Vec<SubtitleCue> {
    let mut cues = Vec::new();
    for frame in frames {
        let lines = wrap_lines(&frame.voiceover.text, MAX_LINE_CHARS);
        if lines.is_empty() {
            continue;
        }
        let chunks: Vec<String> = lines.chunks(MAX_CUE_LINES).map(|c| c.join("\n")).collect();
        let weights: Vec<u64> = chunks
            .iter()
            .map(|c| c.chars().filter(|&ch| ch != '\n').count() as u64)
            .collect();
        let total: u64 = weights.iter().sum();
        let start = frame.start_ms();
        let duration = frame.duration_ms();
        let end = start + duration;
        let mut cumulative = 0;
        let mut previous = start;
        for (i, (chunk, w)) in chunks.into_iter().zip(&weights).enumerate() {
            cumulative += w;
            let boundary = if i + 1 == weights.len() {
                end
            } else {
                (start + duration * cumulative / total).clamp(previous + 1, end)
            };
            cues.push(SubtitleCue {
                index: cues.len() + 1,
                start_s: ms_to_s(previous),
                end_s: ms_to_s(boundary),
                text: chunk,
            });
            previous = boundary;
        }
    }
    cues
}

pub fn format_timestamp(ms: u64) -> String {
    let (h, rest) = (ms / 3_600_000, ms % 3_600_000);
    let (m, rest) = (rest / 60_000, rest % 60_000);
    let (s, ms) = (rest / 1000, rest % 1000);
    format!("{h:02}:{m:02}:{s:02},{ms:03}")
}

pub fn seconds_to_ms(s: f64) -> u64 {
    (s * 1000.0).round().max(0.0) as u64
}

pub fn render_srt(cues: &[SubtitleCue]) -> String {
    let mut out = String::new();
    for cue in cues {
        out.push_str(&format!(
            "{}\n{} --> {}\n{}\n\n",
            cue.index,
            format_timestamp(seconds_to_ms(cue.start_s)),
            format_timestamp(seconds_to_ms(cue.end_s)),
            cue.text
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timestamps() {
        assert_eq!(format_timestamp(0), "00:00:00,000");
        assert_eq!(format_timestamp(4200), "00:00:04,200");
        assert_eq!(format_timestamp(3_723_045), "01:02:03,045");
    }

    #[test]
    fn wrapping() {
        let text = "Welcome to Machine Learning!";
        assert_eq!(wrap_lines(text, 42), vec![text.to_string()]);
        let long = "word ".repeat(30);
        let lines = wrap_lines(&long, 42);
        assert!(lines.iter().all(|l| l.chars().count() <= 42));
        assert_eq!(lines.join(" "), long.trim());
        assert_eq!(wrap_lines(&"x".repeat(50), 42), vec!["x".repeat(42), "x".repeat(8)]);
        assert!(wrap_lines("   ", 42).is_empty());
    }
}
