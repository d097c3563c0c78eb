//! Content generators for the seven timeline fragments, plus the optional
//! definition and paraphrase suggestions offered to the trailer creator.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adapters::{AdapterError, AdapterRegistry, Capability};
use crate::corpus::{CreatorInput, Pathway, PathwayStats, ResourceKind, SplashPosition};
use crate::rng;
use crate::selection::OutlineSelection;
use crate::textmetrics::{term_frequencies, tokenize, StopWords, TermFrequencyTable};

pub const DEFAULT_TF_THRESHOLD: f64 = 0.01;
pub const CTA_ACTION_LABEL: &str = "Start the course";
pub const PLACEHOLDER_AUTHOR_IMAGE: &str = "placeholder_author";
pub const AND_OTHERS: &str = "and others";

const BUNDLED_CTA_PHRASES: &str = include_str!("../data/cta_phrases.txt");

#[derive(Debug, Error)]
pub enum FragmentError {
    #[error("asset not found: {0}")]
    MissingAsset(String),
    #[error("call-to-action phrase set is empty")]
    EmptyPhraseSet,
    #[error("mandatory fragment `{0}` is missing")]
    MissingMandatoryFragment(FragmentKind),
    #[error("fragment `{0}` supplied more than once")]
    DuplicateFragment(FragmentKind),
    #[error(transparent)]
    Adapter(#[from] AdapterError),
}

/// Declaration order is the canonical timeline order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FragmentKind {
    Splash,
    TrailerTitle,
    AuthorDetails,
    Outline,
    MetaInformation,
    SocialProof,
    CallToAction,
}

impl FragmentKind {
    pub const ALL: [FragmentKind; 7] = [
        FragmentKind::Splash,
        FragmentKind::TrailerTitle,
        FragmentKind::AuthorDetails,
        FragmentKind::Outline,
        FragmentKind::MetaInformation,
        FragmentKind::SocialProof,
        FragmentKind::CallToAction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FragmentKind::Splash => "splash",
            FragmentKind::TrailerTitle => "trailer_title",
            FragmentKind::AuthorDetails => "author_details",
            FragmentKind::Outline => "outline",
            FragmentKind::MetaInformation => "meta_information",
            FragmentKind::SocialProof => "social_proof",
            FragmentKind::CallToAction => "call_to_action",
        }
    }

    pub fn is_mandatory(self) -> bool {
        matches!(
            self,
            FragmentKind::TrailerTitle | FragmentKind::Outline | FragmentKind::CallToAction
        )
    }
}

impl std::fmt::Display for FragmentKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SuggestionKind {
    Definition,
    Paraphrase,
}

/// An optional enrichment for the creator to review. Never reaches the
/// storyboard's element text unless `accepted`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Suggestion {
    pub kind: SuggestionKind,
    pub source_resource: usize,
    pub original: String,
    pub proposed: String,
    #[serde(default)]
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TitleCandidate {
    pub text: String,
    pub tf_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrailerTitleCandidates {
    pub candidates: Vec<TitleCandidate>,
    pub selected: String,
    pub fallback_used: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordCloudTerm {
    pub term: String,
    pub count: u64,
    /// Count relative to the most frequent term, in (0, 1].
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlineItem {
    pub resource_index: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Payload {
    Omitted,
    Splash {
        text: String,
        logo: Option<String>,
    },
    TrailerTitle {
        title: String,
        selection: TrailerTitleCandidates,
    },
    AuthorDetails {
        name: String,
        display_name: String,
        affiliation: Option<String>,
        image: String,
        image_is_placeholder: bool,
        additional_authors: usize,
    },
    Outline {
        entries: Vec<OutlineItem>,
    },
    MetaInformation {
        reading_time_minutes: f64,
        total_resources: usize,
        total_words: u64,
        has_discussion_forum: bool,
        wordcloud: Vec<WordCloudTerm>,
    },
    SocialProof {
        learner_count: u64,
        rating: f64,
        review_snippets: Vec<String>,
    },
    CallToAction {
        phrase: String,
        action_label: String,
        action_url: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FragmentData {
    pub kind: FragmentKind,
    pub payload: Payload,
    #[serde(default)]
    pub suggestions: Vec<Suggestion>,
}

impl FragmentData {
    pub fn new(kind: FragmentKind, payload: Payload) -> Self {
        FragmentData { kind, payload, suggestions: Vec::new() }
    }

    pub fn omitted(kind: FragmentKind) -> Self {
        Self::new(kind, Payload::Omitted)
    }

    pub fn is_omitted(&self) -> bool {
        matches!(self.payload, Payload::Omitted)
    }

    /// Values a template element can bind to, keyed by binding name.
    /// Accepted paraphrase suggestions replace the outline text they target.
    pub fn fields(&self) -> BTreeMap<String, String> {
        let mut f = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            if !v.trim().is_empty() {
                f.insert(k.to_string(), v);
            }
        };
        match &self.payload {
            Payload::Omitted => {}
            Payload::Splash { text, logo } => {
                put("splash_text", text.clone());
                if let Some(l) = logo {
                    put("splash_logo", l.clone());
                }
            }
            Payload::TrailerTitle { title, .. } => put("trailer_title", title.clone()),
            Payload::AuthorDetails { name, display_name, affiliation, image, .. } => {
                put("author_name", display_name.clone());
                put("author_primary", name.clone());
                if let Some(a) = affiliation {
                    put("author_affiliation", a.clone());
                }
                put("author_image", image.clone());
            }
            Payload::Outline { entries } => {
                for (i, e) in entries.iter().enumerate() {
                    let text = self
                        .suggestions
                        .iter()
                        .find(|s| {
                            s.accepted
                                && s.kind == SuggestionKind::Paraphrase
                                && s.source_resource == e.resource_index
                        })
                        .map(|s| s.proposed.clone())
                        .unwrap_or_else(|| e.text.clone());
                    put(&format!("outline_{}", i + 1), text);
                }
                put("outline_count", entries.len().to_string());
            }
            Payload::MetaInformation {
                reading_time_minutes,
                total_resources,
                total_words,
                has_discussion_forum,
                wordcloud,
            } => {
                put("reading_time", format!("{reading_time_minutes:.1}"));
                put("total_resources", total_resources.to_string());
                put("total_words", total_words.to_string());
                if *has_discussion_forum {
                    put("discussion_forum", "Discussion forum available".to_string());
                }
                if !wordcloud.is_empty() {
                    put("wordcloud", "wordcloud.json".to_string());
                    put("top_terms", top_terms_text(wordcloud, 3));
                }
            }
            Payload::SocialProof { learner_count, rating, review_snippets } => {
                put("learner_count", learner_count.to_string());
                put("rating", format!("{rating:.1}"));
                for (i, r) in review_snippets.iter().enumerate() {
                    put(&format!("review_{}", i + 1), r.clone());
                }
            }
            Payload::CallToAction { phrase, action_label, action_url } => {
                put("cta_phrase", phrase.clone());
                put("cta_action", action_label.clone());
                if let Some(u) = action_url {
                    put("cta_url", u.clone());
                }
            }
        }
        f
    }
}

fn top_terms_text(wordcloud: &[WordCloudTerm], n: usize) -> String {
    let terms: Vec<&str> = wordcloud.iter().take(n).map(|t| t.term.as_str()).collect();
    match terms.as_slice() {
        [] => String::new(),
        [one] => one.to_string(),
        [init @ .., last] => format!("{} and {}", init.join(", "), last),
    }
}

/// Mean relative corpus frequency of the candidate's non-stopword tokens.
pub fn title_tf_score(candidate: &str, tf: &TermFrequencyTable, stopwords: &StopWords) -> f64 {
    let tokens: Vec<String> = tokenize(candidate)
        .into_iter()
        .filter(|t| !stopwords.contains(t))
        .collect();
    if tokens.is_empty() {
        return 0.0;
    }
    tokens.iter().map(|t| tf.frequency(t)).sum::<f64>() / tokens.len() as f64
}

/// Scores candidates; returns the first highest-scoring index if its score
/// reaches `threshold`.
pub fn pick_title(
    candidates: &[String],
    tf: &TermFrequencyTable,
    stopwords: &StopWords,
    threshold: f64,
) -> (Vec<TitleCandidate>, Option<usize>) {
    let scored: Vec<TitleCandidate> = candidates
        .iter()
        .map(|c| TitleCandidate { text: c.clone(), tf_score: title_tf_score(c, tf, stopwords) })
        .collect();
    let mut best: Option<usize> = None;
    for (i, c) in scored.iter().enumerate() {
        if best.is_none_or(|b| c.tf_score > scored[b].tf_score) {
            best = Some(i);
        }
    }
    let chosen = best.filter(|&b| scored[b].tf_score >= threshold);
    (scored, chosen)
}

/// Creator title hint wins outright. Otherwise hierarchical candidates are
/// scored by corpus term frequency; if none reaches `tf_threshold` (or the
/// hierarchical call fails) the first resource's single-document title is
/// used, taken from its title hint when it has one.
pub fn gen_trailer_title(
    pathway: &Pathway,
    adapters: &AdapterRegistry,
    stopwords: &StopWords,
    tf_threshold: f64,
) -> Result<TrailerTitleCandidates, AdapterError> {
    let texts: Vec<&str> = pathway.resources().iter().map(|r| r.text.as_str()).collect();
    let tf = term_frequencies(&texts, stopwords);
    if let Some(hint) = &pathway.title_hint {
        return Ok(TrailerTitleCandidates {
            candidates: vec![TitleCandidate {
                text: hint.clone(),
                tf_score: title_tf_score(hint, &tf, stopwords),
            }],
            selected: hint.clone(),
            fallback_used: false,
        });
    }
    let (candidates, chosen) = match adapters.hier_titles(&texts) {
        Ok(titles) => pick_title(&titles, &tf, stopwords, tf_threshold),
        Err(e) => {
            log::warn!("hierarchical titles unavailable, falling back: {e}");
            (Vec::new(), None)
        }
    };
    if let Some(i) = chosen {
        let selected = candidates[i].text.clone();
        return Ok(TrailerTitleCandidates { candidates, selected, fallback_used: false });
    }
    let first = pathway.at(1);
    let selected = match &first.meta.title_hint {
        Some(hint) => hint.clone(),
        None => adapters.title(&first.text)?,
    };
    Ok(TrailerTitleCandidates { candidates, selected, fallback_used: true })
}

pub fn trailer_title_fragment(selection: TrailerTitleCandidates) -> FragmentData {
    FragmentData::new(
        FragmentKind::TrailerTitle,
        Payload::TrailerTitle { title: selection.selected.clone(), selection },
    )
}

pub fn gen_splash(creator: &CreatorInput) -> Result<FragmentData, FragmentError> {
    let Some(splash) = &creator.splash else {
        return Ok(FragmentData::omitted(FragmentKind::Splash));
    };
    if let Some(logo) = &splash.logo_path {
        require_asset(creator, logo)?;
    }
    Ok(FragmentData::new(
        FragmentKind::Splash,
        Payload::Splash { text: splash.text.clone(), logo: splash.logo_path.clone() },
    ))
}

fn require_asset(creator: &CreatorInput, path: &str) -> Result<(), FragmentError> {
    if creator.resolve_asset(path).is_file() {
        Ok(())
    } else {
        Err(FragmentError::MissingAsset(path.to_string()))
    }
}

/// Primary author first; authors beyond `max_authors_shown` collapse into
/// "and others".
pub fn gen_author_fragment(
    creator: &CreatorInput,
    max_authors_shown: usize,
) -> Result<FragmentData, FragmentError> {
    let Some(primary) = creator.primary_author() else {
        return Ok(FragmentData::omitted(FragmentKind::AuthorDetails));
    };
    let shown = max_authors_shown.max(1);
    let names: Vec<&str> = creator.authors.iter().map(|a| a.name.as_str()).collect();
    let display_name = if names.len() > shown {
        format!("{} {AND_OTHERS}", names[..shown].join(", "))
    } else {
        match names.as_slice() {
            [one] => one.to_string(),
            [init @ .., last] => format!("{} and {}", init.join(", "), last),
            [] => unreachable!("primary author exists"),
        }
    };
    let (image, image_is_placeholder) = match &primary.image_path {
        Some(path) => {
            require_asset(creator, path)?;
            (path.clone(), false)
        }
        None => (PLACEHOLDER_AUTHOR_IMAGE.to_string(), true),
    };
    Ok(FragmentData::new(
        FragmentKind::AuthorDetails,
        Payload::AuthorDetails {
            name: primary.name.clone(),
            display_name,
            affiliation: primary.affiliation.clone(),
            image,
            image_is_placeholder,
            additional_authors: names.len() - 1,
        },
    ))
}

/// Word-boundary truncation to at most `max_chars` characters, ending in
/// "…" when anything was cut.
pub fn truncate_at_word(text: &str, max_chars: usize) -> String {
    let text = text.trim();
    if text.chars().count() <= max_chars {
        return text.to_string();
    }
    let budget = max_chars.saturating_sub(1);
    let mut out = String::new();
    for word in text.split_whitespace() {
        let needed = if out.is_empty() { word.chars().count() } else { out.chars().count() + 1 + word.chars().count() };
        if needed > budget {
            break;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    if out.is_empty() {
        out = text.chars().take(budget).collect();
    }
    let trimmed = out.trim_end_matches(|c: char| c.is_ascii_punctuation() && c != ')');
    format!("{trimmed}…")
}

/// Outline entries in order; entries longer than `max_chars` get a
/// paraphrase suggestion (truncation if the paraphraser is unavailable).
pub fn gen_outline_fragment(
    selection: &OutlineSelection,
    adapters: &AdapterRegistry,
    max_chars: usize,
) -> FragmentData {
    let entries: Vec<OutlineItem> = selection
        .entries
        .iter()
        .map(|e| OutlineItem { resource_index: e.resource_index, text: e.outline_text.clone() })
        .collect();
    let suggestions = entries
        .iter()
        .filter(|e| e.text.chars().count() > max_chars)
        .map(|e| {
            let proposed = adapters
                .paraphrase(&e.text, max_chars)
                .unwrap_or_else(|err| {
                    log::warn!("paraphrase unavailable, suggesting truncation: {err}");
                    truncate_at_word(&e.text, max_chars)
                });
            Suggestion {
                kind: SuggestionKind::Paraphrase,
                source_resource: e.resource_index,
                original: e.text.clone(),
                proposed,
                accepted: false,
            }
        })
        .collect();
    FragmentData {
        kind: FragmentKind::Outline,
        payload: Payload::Outline { entries },
        suggestions,
    }
}

pub fn gen_meta_fragment(stats: &PathwayStats, tf: &TermFrequencyTable, top_k: usize) -> FragmentData {
    assert!(top_k >= 1, "word cloud needs at least one term");
    let top = tf.top_k(top_k);
    let max = top.first().map(|(_, c)| *c).unwrap_or(1) as f64;
    let wordcloud = top
        .into_iter()
        .map(|(term, count)| WordCloudTerm { term, count, weight: count as f64 / max })
        .collect();
    FragmentData::new(
        FragmentKind::MetaInformation,
        Payload::MetaInformation {
            reading_time_minutes: stats.reading_time_minutes,
            total_resources: stats.total_resources,
            total_words: stats.total_words,
            has_discussion_forum: stats.has_discussion_forum,
            wordcloud,
        },
    )
}

pub fn gen_social_proof(creator: &CreatorInput) -> FragmentData {
    match &creator.social_proof {
        Some(sp) => FragmentData::new(
            FragmentKind::SocialProof,
            Payload::SocialProof {
                learner_count: sp.learner_count,
                rating: sp.rating,
                review_snippets: sp.review_snippets.clone(),
            },
        ),
        None => FragmentData::omitted(FragmentKind::SocialProof),
    }
}

pub fn default_cta_phrases() -> Vec<String> {
    parse_phrases(BUNDLED_CTA_PHRASES)
}

/// One phrase per line; blank lines ignored.
pub fn parse_phrases(content: &str) -> Vec<String> {
    content
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_string)
        .collect()
}

pub fn gen_cta(
    rng_seed: u64,
    phrases: &[String],
    action_url: Option<String>,
) -> Result<FragmentData, FragmentError> {
    if phrases.is_empty() {
        return Err(FragmentError::EmptyPhraseSet);
    }
    let mut rng = rng::stream(rng_seed, "cta");
    let phrase = phrases[rng.gen_range(0..phrases.len())].clone();
    Ok(FragmentData::new(
        FragmentKind::CallToAction,
        Payload::CallToAction { phrase, action_label: CTA_ACTION_LABEL.to_string(), action_url },
    ))
}

/// Splits on `.`, `!` or `?` followed by whitespace or end of text.
pub fn split_sentences(text: &str) -> Vec<String> {
    let mut sentences = Vec::new();
    let mut current = String::new();
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        current.push(c);
        if matches!(c, '.' | '!' | '?') && chars.peek().is_none_or(|n| n.is_whitespace()) {
            let s = current.split_whitespace().collect::<Vec<_>>().join(" ");
            if !s.is_empty() {
                sentences.push(s);
            }
            current.clear();
        }
    }
    let rest = current.split_whitespace().collect::<Vec<_>>().join(" ");
    if !rest.is_empty() {
        sentences.push(rest);
    }
    sentences
}

const DEFINITION_MIN_TOKENS: usize = 8;
const DEFINITION_MAX_TOKENS: usize = 60;
const DEFINITION_MAX_SUBJECT: usize = 4;
const NON_SUBJECTS: &[&str] = &[
    "it", "this", "that", "there", "here", "he", "she", "they", "which", "what", "these", "those", "much",
    "many", "most", "some", "each", "every", "all",
];

/// Copula-style definitional pattern ("X is a/an/the ...", "X refers to ...",
/// "X is defined as ...") with a 1-4 token subject, on sentences of 8-60
/// tokens.
pub fn looks_like_definition(sentence: &str) -> bool {
    let tokens = tokenize(sentence);
    if !(DEFINITION_MIN_TOKENS..=DEFINITION_MAX_TOKENS).contains(&tokens.len()) {
        return false;
    }
    if NON_SUBJECTS.contains(&tokens[0].as_str()) {
        return false;
    }
    let t = |i: usize| tokens.get(i).map(String::as_str).unwrap_or("");
    (1..=DEFINITION_MAX_SUBJECT).any(|p| {
        matches!(
            (t(p), t(p + 1), t(p + 2)),
            ("is" | "are", "a" | "an" | "the", _) | ("refers" | "refer", "to", _) | ("is" | "are", "defined", "as")
        )
    })
}

/// Definitional sentences in pathway order, at most `max_suggestions`.
/// The classifier adapter decides when configured; its failures fall back
/// to the built-in pattern heuristic.
pub fn suggest_definitions(
    pathway: &Pathway,
    adapters: &AdapterRegistry,
    max_suggestions: usize,
) -> Vec<Suggestion> {
    let mut out = Vec::new();
    if max_suggestions == 0 {
        return out;
    }
    let use_adapter = adapters.is_enabled(Capability::ClassifyDefinition);
    for resource in pathway.resources() {
        if resource.meta.kind == ResourceKind::Assessment {
            continue;
        }
        for sentence in split_sentences(&resource.text) {
            let n = tokenize(&sentence).len();
            if !(DEFINITION_MIN_TOKENS..=DEFINITION_MAX_TOKENS).contains(&n) {
                continue;
            }
            let is_definition = if use_adapter {
                adapters
                    .classify_definition(&sentence)
                    .map(|l| l.is_definition)
                    .unwrap_or_else(|_| looks_like_definition(&sentence))
            } else {
                looks_like_definition(&sentence)
            };
            if is_definition {
                out.push(Suggestion {
                    kind: SuggestionKind::Definition,
                    source_resource: resource.meta.order,
                    original: sentence.clone(),
                    proposed: sentence,
                    accepted: false,
                });
                if out.len() == max_suggestions {
                    return out;
                }
            }
        }
    }
    out
}

/// Canonical order with omitted fragments dropped; splash moves to the end
/// when requested.
pub fn build_timeline(
    fragments: Vec<FragmentData>,
    splash_position: SplashPosition,
) -> Result<Vec<FragmentData>, FragmentError> {
    let mut by_kind: BTreeMap<FragmentKind, FragmentData> = BTreeMap::new();
    for f in fragments {
        let kind = f.kind;
        if by_kind.insert(kind, f).is_some() {
            return Err(FragmentError::DuplicateFragment(kind));
        }
    }
    by_kind.retain(|_, f| !f.is_omitted());
    for kind in FragmentKind::ALL {
        if kind.is_mandatory() && !by_kind.contains_key(&kind) {
            return Err(FragmentError::MissingMandatoryFragment(kind));
        }
    }
    let mut timeline: Vec<FragmentData> = by_kind.into_values().collect();
    if splash_position == SplashPosition::Last && timeline[0].kind == FragmentKind::Splash {
        let splash = timeline.remove(0);
        timeline.push(splash);
    }
    Ok(timeline)
}
