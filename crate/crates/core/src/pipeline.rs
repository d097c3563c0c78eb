//! End-to-end compilation from a loaded pathway to every output artifact.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use crate::adapters::{AdapterError, AdapterRegistry};
use crate::canonical;
use crate::composition::{
    assemble_storyboard, emit_renderplan, emit_voiceover, render_srt, Audit, ComposeOptions, CompositionError,
    RenderPlan, SpeakerProfile, Storyboard, Template, DEFAULT_SPEAKING_RATE_WPM, DEFAULT_VOICE,
};
use crate::corpus::{compute_stats, CorpusError, CreatorInput, Pathway, DEFAULT_READING_SPEED_WPM};
use crate::fragments::{
    build_timeline, default_cta_phrases, gen_author_fragment, gen_cta, gen_meta_fragment, gen_outline_fragment,
    gen_social_proof, gen_splash, gen_trailer_title, suggest_definitions, trailer_title_fragment, FragmentError,
    FragmentKind, Payload, Suggestion, WordCloudTerm, DEFAULT_TF_THRESHOLD,
};
use crate::selection::{select_outline, FilterConfig, SelectionError, DEFAULT_MIN_TOKENS_SHORT_DOC};
use crate::textmetrics::{term_frequencies, StopWords};

pub const STORYBOARD_FILE: &str = "storyboard.json";
pub const SUBTITLES_FILE: &str = "subtitles.srt";
pub const VOICEOVER_FILE: &str = "voiceover.txt";
pub const RENDERPLAN_FILE: &str = "renderplan.json";
pub const WORDCLOUD_FILE: &str = "wordcloud.json";
pub const OUTPUT_FILES: [&str; 5] = [STORYBOARD_FILE, SUBTITLES_FILE, VOICEOVER_FILE, RENDERPLAN_FILE, WORDCLOUD_FILE];

pub const DEFAULT_WORDCLOUD_TOP_K: usize = 20;
pub const DEFAULT_MAX_DEFINITIONS: usize = 3;
pub const DEFAULT_OUTLINE_MAX_CHARS: usize = 80;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Fragment(#[from] FragmentError),
    #[error(transparent)]
    Composition(#[from] CompositionError),
    #[error(transparent)]
    Adapter(#[from] AdapterError),
    #[error("unknown or invalid override `{key}={value}`")]
    Override { key: String, value: String },
}

impl PipelineError {
    /// Stable name of the underlying error, for structured reports.
    pub fn kind(&self) -> &'static str {
        match self {
            PipelineError::Corpus(CorpusError::MissingFile(_)) => "MissingFile",
            PipelineError::Corpus(CorpusError::SchemaError { .. }) => "SchemaError",
            PipelineError::Corpus(CorpusError::DuplicateId(_)) => "DuplicateId",
            PipelineError::Corpus(CorpusError::EmptyPathway) => "EmptyPathway",
            PipelineError::Selection(SelectionError::TooFewEligible { .. }) => "TooFewEligible",
            PipelineError::Selection(SelectionError::Adapter(_)) | PipelineError::Adapter(_) => "AdapterFailure",
            PipelineError::Fragment(FragmentError::MissingAsset(_)) => "MissingAsset",
            PipelineError::Fragment(FragmentError::EmptyPhraseSet) => "EmptyPhraseSet",
            PipelineError::Fragment(FragmentError::MissingMandatoryFragment(_)) => "MissingMandatoryFragment",
            PipelineError::Fragment(FragmentError::DuplicateFragment(_)) => "DuplicateFragment",
            PipelineError::Fragment(FragmentError::Adapter(_)) => "AdapterFailure",
            PipelineError::Composition(CompositionError::Schema(_)) => "SchemaError",
            PipelineError::Composition(CompositionError::Overlap { .. }) => "OverlapError",
            PipelineError::Composition(CompositionError::DanglingSlot { .. }) => "DanglingSlot",
            PipelineError::Composition(CompositionError::EmptyGrammarSet(_)) => "EmptyGrammarSet",
            PipelineError::Composition(CompositionError::UnfilledSlot(_)) => "UnfilledSlot",
            PipelineError::Composition(CompositionError::TemplateMismatch(_)) => "TemplateMismatch",
            PipelineError::Override { .. } => "InvalidOverride",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompileOptions {
    pub seed: u64,
    pub reading_speed_wpm: f64,
    pub speaking_rate_wpm: f64,
    pub voice: String,
    pub tf_threshold: f64,
    pub wordcloud_top_k: usize,
    pub max_definition_suggestions: usize,
    pub outline_max_chars: usize,
    pub min_tokens_short_doc: usize,
    pub cta_phrases: Vec<String>,
    /// Suggestions the creator reviewed; matching ones are applied with the
    /// creator's `proposed` text.
    pub accepted: Vec<Suggestion>,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            seed: 0,
            reading_speed_wpm: DEFAULT_READING_SPEED_WPM,
            speaking_rate_wpm: DEFAULT_SPEAKING_RATE_WPM,
            voice: DEFAULT_VOICE.to_string(),
            tf_threshold: DEFAULT_TF_THRESHOLD,
            wordcloud_top_k: DEFAULT_WORDCLOUD_TOP_K,
            max_definition_suggestions: DEFAULT_MAX_DEFINITIONS,
            outline_max_chars: DEFAULT_OUTLINE_MAX_CHARS,
            min_tokens_short_doc: DEFAULT_MIN_TOKENS_SHORT_DOC,
            cta_phrases: default_cta_phrases(),
            accepted: Vec::new(),
        }
    }
}

impl CompileOptions {
    /// `key=value` tuning from the command line.
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<(), PipelineError> {
        let bad = || PipelineError::Override { key: key.to_string(), value: value.to_string() };
        let positive = |v: f64| if v > 0.0 { Ok(v) } else { Err(bad()) };
        match key {
            "tf_threshold" => self.tf_threshold = value.parse().map_err(|_| bad())?,
            "reading_speed_wpm" => self.reading_speed_wpm = positive(value.parse().map_err(|_| bad())?)?,
            "speaking_rate_wpm" => self.speaking_rate_wpm = positive(value.parse().map_err(|_| bad())?)?,
            "voice" => self.voice = value.to_string(),
            "wordcloud_top_k" => {
                self.wordcloud_top_k = value.parse().ok().filter(|&k: &usize| k >= 1).ok_or_else(bad)?
            }
            "max_definition_suggestions" => self.max_definition_suggestions = value.parse().map_err(|_| bad())?,
            "outline_max_chars" => {
                self.outline_max_chars = value.parse().ok().filter(|&k: &usize| k >= 2).ok_or_else(bad)?
            }
            "min_tokens_short_doc" => self.min_tokens_short_doc = value.parse().map_err(|_| bad())?,
            _ => return Err(bad()),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct WordCloudFile<'a> {
    terms: &'a [WordCloudTerm],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Compiled {
    pub storyboard: Storyboard,
    pub renderplan: RenderPlan,
    /// Every suggestion offered, accepted or not.
    pub suggestions: Vec<Suggestion>,
    pub wordcloud: Vec<WordCloudTerm>,
}

impl Compiled {
    pub fn storyboard_json(&self) -> String {
        canonical::to_string(&self.storyboard).expect("storyboard serializes")
    }

    pub fn renderplan_json(&self) -> String {
        canonical::to_string(&self.renderplan).expect("render plan serializes")
    }

    pub fn subtitles_srt(&self) -> String {
        render_srt(&self.storyboard.subtitles)
    }

    pub fn voiceover_txt(&self) -> String {
        emit_voiceover(&self.storyboard)
    }

    pub fn wordcloud_json(&self) -> String {
        canonical::to_string(&WordCloudFile { terms: &self.wordcloud }).expect("word cloud serializes")
    }

    pub fn suggestions_json(&self) -> String {
        canonical::to_string(&self.suggestions).expect("suggestions serialize")
    }

    /// Writes the five output files; on failure any already written are
    /// removed.
    pub fn write_to(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let contents = [
            self.storyboard_json(),
            self.subtitles_srt(),
            self.voiceover_txt(),
            self.renderplan_json(),
            self.wordcloud_json(),
        ];
        let mut written = Vec::new();
        for (name, content) in OUTPUT_FILES.iter().zip(contents) {
            let path = dir.join(name);
            if let Err(e) = fs::write(&path, content) {
                remove_outputs(dir);
                return Err(e);
            }
            written.push(path);
        }
        Ok(written)
    }
}

/// Deletes whichever of the output files exist in `dir`.
pub fn remove_outputs(dir: &Path) {
    for name in OUTPUT_FILES {
        let _ = fs::remove_file(dir.join(name));
    }
}

fn apply_accepted(suggestions: &mut [Suggestion], accepted: &[Suggestion]) {
    for s in suggestions {
        if let Some(a) = accepted.iter().find(|a| {
            a.accepted && a.kind == s.kind && a.source_resource == s.source_resource && a.original == s.original
        }) {
            s.accepted = true;
            s.proposed = a.proposed.clone();
        }
    }
}

pub fn compile(
    pathway: &Pathway,
    creator: &CreatorInput,
    template: &Template,
    adapters: &AdapterRegistry,
    options: &CompileOptions,
) -> Result<Compiled, PipelineError> {
    let stopwords = StopWords::english();
    let constraints = &template.constraints;

    let mut filter = FilterConfig::new(constraints.outline_slots);
    filter.min_tokens_short_doc = options.min_tokens_short_doc;
    filter.rng_seed = options.seed;
    let outline = select_outline(pathway, &filter, adapters)?;

    let title = gen_trailer_title(pathway, adapters, &stopwords, options.tf_threshold)?;
    let texts: Vec<&str> = pathway.resources().iter().map(|r| r.text.as_str()).collect();
    let tf = term_frequencies(&texts, &stopwords);
    let stats = compute_stats(pathway, options.reading_speed_wpm);

    let mut outline_fragment = gen_outline_fragment(&outline, adapters, options.outline_max_chars);
    outline_fragment
        .suggestions
        .extend(suggest_definitions(pathway, adapters, options.max_definition_suggestions));
    apply_accepted(&mut outline_fragment.suggestions, &options.accepted);

    let meta = gen_meta_fragment(&stats, &tf, options.wordcloud_top_k);
    let wordcloud = match &meta.payload {
        Payload::MetaInformation { wordcloud, .. } => wordcloud.clone(),
        _ => Vec::new(),
    };
    let action_url = creator.preferences.get("action_url").cloned();
    let fragments = vec![
        gen_splash(creator)?,
        trailer_title_fragment(title.clone()),
        gen_author_fragment(creator, constraints.max_authors_shown)?,
        outline_fragment,
        meta,
        gen_social_proof(creator),
        gen_cta(options.seed, &options.cta_phrases, action_url)?,
    ];
    let splash_position = creator.splash.as_ref().map(|s| s.position).unwrap_or_default();
    let timeline = build_timeline(fragments, splash_position)?;
    let suggestions: Vec<Suggestion> = timeline.iter().flat_map(|f| f.suggestions.clone()).collect();
    debug_assert!(timeline.iter().any(|f| f.kind == FragmentKind::Outline));

    let voice = creator.preferences.get("voice").cloned().unwrap_or_else(|| options.voice.clone());
    let compose = ComposeOptions {
        seed: options.seed,
        speaker: SpeakerProfile { voice, rate_wpm: options.speaking_rate_wpm },
    };
    let audit = Audit {
        filter_outcomes: outline.outcomes.clone(),
        outline_bins: outline.bins.clone(),
        title_selection: Some(title),
        ..Audit::default()
    };
    let storyboard = assemble_storyboard(&timeline, template, adapters, &compose, audit)?;
    let renderplan = emit_renderplan(&storyboard, template);
    Ok(Compiled { storyboard, renderplan, suggestions, wordcloud })
}
