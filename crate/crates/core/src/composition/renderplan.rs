use serde::{Deserialize, Serialize};

use super::storyboard::Storyboard;
use super::template::{ElementKind, Rect, Template, Transition};
use super::timing::ms_to_s;

pub const RENDERPLAN_VERSION: &str = "renderplan/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FadeDirection {
    In,
    Out,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum RenderInstruction {
    ShowFrame {
        start_s: f64,
        end_s: f64,
        frame_id: String,
    },
    PlayAudio {
        start_s: f64,
        end_s: f64,
        frame_id: String,
        path: String,
    },
    Fade {
        start_s: f64,
        end_s: f64,
        frame_id: String,
        direction: FadeDirection,
    },
    DrawText {
        start_s: f64,
        end_s: f64,
        frame_id: String,
        element_id: String,
        text: String,
        rect: Rect,
        font_family: String,
        font_size: f64,
        color: String,
    },
    DrawImage {
        start_s: f64,
        end_s: f64,
        frame_id: String,
        element_id: String,
        path: String,
        rect: Rect,
    },
}

impl RenderInstruction {
    pub fn start_s(&self) -> f64 {
        match self {
            RenderInstruction::ShowFrame { start_s, .. }
            | RenderInstruction::PlayAudio { start_s, .. }
            | RenderInstruction::Fade { start_s, .. }
            | RenderInstruction::DrawText { start_s, .. }
            | RenderInstruction::DrawImage { start_s, .. } => *start_s,
        }
    }

    pub fn end_s(&self) -> f64 {
        match self {
            RenderInstruction::ShowFrame { end_s, .. }
            | RenderInstruction::PlayAudio { end_s, .. }
            | RenderInstruction::Fade { end_s, .. }
            | RenderInstruction::DrawText { end_s, .. }
            | RenderInstruction::DrawImage { end_s, .. } => *end_s,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderPlan {
    pub version: String,
    pub template_id: String,
    pub total_duration_s: f64,
    pub instructions: Vec<RenderInstruction>,
}

impl RenderPlan {
    pub fn end_s(&self) -> f64 {
        self.instructions.iter().map(RenderInstruction::end_s).fold(0.0, f64::max)
    }
}

/// Flat, absolutely timed instruction list. Image and audio paths are
/// passed through as declared (relative to the manifest directory).
pub fn emit_renderplan(storyboard: &Storyboard, template: &Template) -> RenderPlan {
    let mut instructions = Vec::new();
    for frame in storyboard.frames() {
        let (start_ms, end_ms) = (frame.start_ms(), frame.end_ms());
        let (start_s, end_s) = (ms_to_s(start_ms), ms_to_s(end_ms));
        let frame_id = frame.frame_id.clone();
        instructions.push(RenderInstruction::ShowFrame { start_s, end_s, frame_id: frame_id.clone() });
        if let Some(path) = &frame.voiceover.audio_ref {
            let audio_end = frame.voiceover.effective_duration_s() + start_s;
            instructions.push(RenderInstruction::PlayAudio {
                start_s,
                end_s: audio_end.min(end_s),
                frame_id: frame_id.clone(),
                path: path.clone(),
            });
        }
        let fades = frame.frame_spec.transition == Transition::Fade;
        if fades {
            instructions.push(RenderInstruction::Fade {
                start_s,
                end_s: start_s + frame.fade_in_s,
                frame_id: frame_id.clone(),
                direction: FadeDirection::In,
            });
        }
        for element in &frame.frame_spec.elements {
            let Some(content) = frame.resolved_elements.get(&element.id) else {
                continue;
            };
            let rect = element.position.clone();
            instructions.push(match element.kind {
                ElementKind::Image => RenderInstruction::DrawImage {
                    start_s,
                    end_s,
                    frame_id: frame_id.clone(),
                    element_id: element.id.clone(),
                    path: content.clone(),
                    rect,
                },
                ElementKind::Text | ElementKind::Stat | ElementKind::ListItem => RenderInstruction::DrawText {
                    start_s,
                    end_s,
                    frame_id: frame_id.clone(),
                    element_id: element.id.clone(),
                    text: content.clone(),
                    rect,
                    font_family: template.style.font_family.clone(),
                    font_size: template.font_size(&element.style_role),
                    color: template.color(&element.style_role),
                },
            });
        }
        if fades {
            instructions.push(RenderInstruction::Fade {
                start_s: end_s - frame.fade_out_s,
                end_s,
                frame_id,
                direction: FadeDirection::Out,
            });
        }
    }
    RenderPlan {
        version: RENDERPLAN_VERSION.to_string(),
        template_id: template.id.clone(),
        total_duration_s: storyboard.total_duration_s,
        instructions,
    }
}
