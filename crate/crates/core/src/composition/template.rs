use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::grammar::placeholders;
use super::CompositionError;
use crate::fragments::FragmentKind;

pub const DEFAULT_MIN_FRAME_S: f64 = 2.0;
pub const DEFAULT_PAD_S: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl Rect {
    pub fn within_unit_square(&self) -> bool {
        let ok = |v: f64| (0.0..=1.0).contains(&v);
        ok(self.x) && ok(self.y) && self.w > 0.0 && self.h > 0.0 && self.x + self.w <= 1.0 + 1e-9 && self.y + self.h <= 1.0 + 1e-9
    }

    /// Positive-area intersection; touching edges do not count.
    pub fn overlaps(&self, other: &Rect) -> bool {
        self.x < other.x + other.w
            && other.x < self.x + self.w
            && self.y < other.y + other.h
            && other.y < self.y + self.h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Text,
    Image,
    Stat,
    ListItem,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementSpec {
    pub id: String,
    pub kind: ElementKind,
    pub position: Rect,
    pub style_role: String,
    /// Fragment field that fills this element; defaults to `id`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bind: Option<String>,
    /// Fixed content, used instead of any bound field.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
}

impl ElementSpec {
    pub fn binding(&self) -> &str {
        self.bind.as_deref().unwrap_or(&self.id)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transition {
    #[default]
    Cut,
    Fade,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrammarRule {
    pub pattern: String,
    pub slots: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrameSpec {
    pub id: String,
    pub elements: Vec<ElementSpec>,
    #[serde(default)]
    pub transition: Transition,
    /// Replaces the fragment-level grammar set for this frame.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grammars: Option<Vec<GrammarRule>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FragmentSpec {
    pub frames: Vec<FrameSpec>,
    #[serde(default)]
    pub grammars: Vec<GrammarRule>,
}

impl FragmentSpec {
    pub fn grammars_for<'a>(&'a self, frame: &'a FrameSpec) -> &'a [GrammarRule] {
        frame.grammars.as_deref().unwrap_or(&self.grammars)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Style {
    pub font_family: String,
    #[serde(default)]
    pub font_sizes: BTreeMap<String, f64>,
    #[serde(default)]
    pub colors: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Animation {
    pub fade_in_s: f64,
    pub fade_out_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constraints {
    pub outline_slots: usize,
    #[serde(default = "one")]
    pub max_authors_shown: usize,
    #[serde(default = "default_min_frame")]
    pub min_frame_s: f64,
    #[serde(default = "default_pad")]
    pub pad_s: f64,
}

fn one() -> usize {
    1
}

fn default_min_frame() -> f64 {
    DEFAULT_MIN_FRAME_S
}

fn default_pad() -> f64 {
    DEFAULT_PAD_S
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Template {
    pub id: String,
    pub fragment_specs: BTreeMap<FragmentKind, FragmentSpec>,
    pub style: Style,
    pub animation: Animation,
    pub constraints: Constraints,
}

impl Template {
    pub fn parse(content: &str) -> Result<Self, CompositionError> {
        let template: Template =
            serde_json::from_str(content).map_err(|e| CompositionError::Schema(e.to_string()))?;
        template.validate()?;
        Ok(template)
    }

    pub fn load(path: &Path) -> Result<Self, CompositionError> {
        let content = fs::read_to_string(path)
            .map_err(|e| CompositionError::Schema(format!("{}: {e}", path.display())))?;
        Self::parse(&content)
    }

    pub fn validate(&self) -> Result<(), CompositionError> {
        match self.findings().into_iter().next() {
            Some(f) => Err(f),
            None => Ok(()),
        }
    }

    /// Every invariant violation, in template order.
    pub fn findings(&self) -> Vec<CompositionError> {
        let mut out = Vec::new();
        let schema = |m: String| CompositionError::Schema(m);
        let c = &self.constraints;
        if c.outline_slots < 2 {
            out.push(schema(format!("outline_slots must be >= 2, got {}", c.outline_slots)));
        }
        if c.max_authors_shown < 1 {
            out.push(schema("max_authors_shown must be >= 1".into()));
        }
        if !(c.min_frame_s > 0.0) || !(c.pad_s >= 0.0) {
            out.push(schema("min_frame_s must be > 0 and pad_s >= 0".into()));
        }
        if !(self.animation.fade_in_s >= 0.0) || !(self.animation.fade_out_s >= 0.0) {
            out.push(schema("fade durations must be >= 0".into()));
        }
        let mut frame_ids = BTreeSet::new();
        for (kind, spec) in &self.fragment_specs {
            if spec.frames.is_empty() {
                out.push(schema(format!("fragment `{kind}` has no frames")));
            }
            let mut ids = BTreeSet::new();
            for frame in &spec.frames {
                if !frame_ids.insert(frame.id.as_str()) {
                    out.push(schema(format!("frame id `{}` used more than once", frame.id)));
                }
                let mut local = BTreeSet::new();
                for e in &frame.elements {
                    if !local.insert(e.id.as_str()) {
                        out.push(schema(format!("element id `{}` repeated in frame `{}`", e.id, frame.id)));
                    }
                    if !e.position.within_unit_square() {
                        out.push(schema(format!("element `{}` lies outside the unit square", e.id)));
                    }
                    ids.insert(e.id.as_str());
                }
                for (i, a) in frame.elements.iter().enumerate() {
                    for b in &frame.elements[i + 1..] {
                        if a.position.overlaps(&b.position) {
                            out.push(CompositionError::Overlap {
                                frame: frame.id.clone(),
                                a: a.id.clone(),
                                b: b.id.clone(),
                            });
                        }
                    }
                }
            }
            let rule_sets = std::iter::once(&spec.grammars)
                .chain(spec.frames.iter().filter_map(|f| f.grammars.as_ref()));
            for rule in rule_sets.flatten() {
                for p in placeholders(&rule.pattern) {
                    if !rule.slots.iter().any(|s| s == p) {
                        out.push(schema(format!("placeholder `{{{p}}}` missing from slots of `{}`", rule.pattern)));
                    }
                }
                for slot in &rule.slots {
                    if !ids.contains(slot.as_str()) {
                        out.push(CompositionError::DanglingSlot { fragment: *kind, slot: slot.clone() });
                    }
                }
            }
        }
        out
    }

    pub fn font_size(&self, role: &str) -> f64 {
        self.style.font_sizes.get(role).copied().unwrap_or(24.0)
    }

    pub fn color(&self, role: &str) -> String {
        self.style.colors.get(role).cloned().unwrap_or_else(|| "#ffffff".to_string())
    }
}

pub fn load_template(path: &Path) -> Result<Template, CompositionError> {
    Template::load(path)
}
