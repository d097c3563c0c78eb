//! Pathway manifest loading and pathway-level statistics.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::textmetrics::tokenize;

pub const DEFAULT_READING_SPEED_WPM: f64 = 200.0;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),
    #[error("schema error in {}: {message}", .path.display())]
    SchemaError { path: PathBuf, message: String },
    #[error("duplicate resource id `{0}`")]
    DuplicateId(String),
    #[error("pathway has no resources")]
    EmptyPathway,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResourceKind {
    Document,
    VideoTranscript,
    Assessment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResourceMeta {
    pub id: String,
    pub title_hint: Option<String>,
    pub kind: ResourceKind,
    /// 1-based position in the pathway.
    pub order: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resource {
    pub meta: ResourceMeta,
    pub text: String,
    pub token_count: usize,
}

impl Resource {
    pub fn new(meta: ResourceMeta, text: impl Into<String>) -> Self {
        let text = text.into();
        let token_count = tokenize(&text).len();
        Resource { meta, text, token_count }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pathway {
    resources: Vec<Resource>,
    pub title_hint: Option<String>,
    pub has_discussion_forum: bool,
}

impl Pathway {
    /// Builds a pathway from resources already in pathway order; `order`
    /// fields are reassigned to 1..N.
    pub fn new(resources: Vec<Resource>) -> Result<Self, CorpusError> {
        if resources.is_empty() {
            return Err(CorpusError::EmptyPathway);
        }
        let mut seen = HashSet::new();
        for r in &resources {
            if !seen.insert(r.meta.id.clone()) {
                return Err(CorpusError::DuplicateId(r.meta.id.clone()));
            }
        }
        let resources = resources
            .into_iter()
            .enumerate()
            .map(|(i, mut r)| {
                r.meta.order = i + 1;
                r
            })
            .collect();
        Ok(Pathway { resources, title_hint: None, has_discussion_forum: false })
    }

    /// Convenience for documents given as plain strings, ids `r1..rN`.
    pub fn from_texts<S: AsRef<str>>(texts: &[S]) -> Result<Self, CorpusError> {
        Self::new(
            texts
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    Resource::new(
                        ResourceMeta {
                            id: format!("r{}", i + 1),
                            title_hint: None,
                            kind: ResourceKind::Document,
                            order: i + 1,
                        },
                        t.as_ref(),
                    )
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.resources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.resources.is_empty()
    }

    pub fn resources(&self) -> &[Resource] {
        &self.resources
    }

    /// Resource at a 1-based pathway position.
    pub fn get(&self, position: usize) -> Option<&Resource> {
        position.checked_sub(1).and_then(|i| self.resources.get(i))
    }

    pub fn at(&self, position: usize) -> &Resource {
        self.get(position)
            .unwrap_or_else(|| panic!("pathway position {position} out of range"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Author {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub affiliation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_path: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplashPosition {
    #[default]
    First,
    Last,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Splash {
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logo_path: Option<String>,
    #[serde(default)]
    pub position: SplashPosition,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SocialProof {
    pub learner_count: u64,
    pub rating: f64,
    #[serde(default)]
    pub review_snippets: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CreatorInput {
    #[serde(default)]
    pub authors: Vec<Author>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub splash: Option<Splash>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub social_proof: Option<SocialProof>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub preferences: BTreeMap<String, String>,
    /// Directory that relative asset paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl CreatorInput {
    pub fn primary_author(&self) -> Option<&Author> {
        self.authors.first()
    }

    pub fn resolve_asset(&self, path: &str) -> PathBuf {
        self.base_dir.join(path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestResource {
    pub id: String,
    pub path: String,
    pub kind: ResourceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title_hint: Option<String>,
}

/// On-disk form of `pathway.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title_hint: Option<String>,
    pub resources: Vec<ManifestResource>,
    #[serde(default)]
    pub creator: CreatorInput,
    #[serde(default)]
    pub has_discussion_forum: bool,
}

impl Manifest {
    pub fn parse(content: &str, path: &Path) -> Result<Self, CorpusError> {
        let manifest: Manifest =
            serde_json::from_str(content).map_err(|e| CorpusError::SchemaError {
                path: path.to_path_buf(),
                message: e.to_string(),
            })?;
        manifest.check(path)?;
        Ok(manifest)
    }

    pub fn read(path: &Path) -> Result<Self, CorpusError> {
        let content =
            fs::read_to_string(path).map_err(|_| CorpusError::MissingFile(path.to_path_buf()))?;
        Self::parse(&content, path)
    }

    fn check(&self, path: &Path) -> Result<(), CorpusError> {
        if self.resources.is_empty() {
            return Err(CorpusError::EmptyPathway);
        }
        let mut seen = HashSet::new();
        for r in &self.resources {
            if !seen.insert(r.id.as_str()) {
                return Err(CorpusError::DuplicateId(r.id.clone()));
            }
        }
        let schema = |message: String| CorpusError::SchemaError {
            path: path.to_path_buf(),
            message,
        };
        if let Some(sp) = &self.creator.social_proof {
            if !(0.0..=5.0).contains(&sp.rating) {
                return Err(schema(format!("rating {} outside [0, 5]", sp.rating)));
            }
        }
        if self.creator.authors.iter().any(|a| a.name.trim().is_empty()) {
            return Err(schema("author name must not be empty".into()));
        }
        Ok(())
    }

    pub fn to_canonical_json(&self) -> String {
        crate::canonical::to_string(self).expect("manifest serializes")
    }
}

/// Loads `pathway.json` and the plain-text resources it references.
/// Resource paths resolve relative to the manifest's directory.
pub fn load_manifest(path: &Path) -> Result<(Pathway, CreatorInput), CorpusError> {
    let manifest = Manifest::read(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let resources = std::thread::scope(|scope| {
        let handles: Vec<_> = manifest
            .resources
            .iter()
            .enumerate()
            .map(|(i, entry)| {
                let file = base.join(&entry.path);
                scope.spawn(move || {
                    let text = fs::read_to_string(&file)
                        .map_err(|_| CorpusError::MissingFile(file.clone()))?;
                    Ok(Resource::new(
                        ResourceMeta {
                            id: entry.id.clone(),
                            title_hint: entry.title_hint.clone(),
                            kind: entry.kind,
                            order: i + 1,
                        },
                        text,
                    ))
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("resource loader panicked"))
            .collect::<Result<Vec<_>, CorpusError>>()
    })?;
    let mut pathway = Pathway::new(resources)?;
    pathway.title_hint = manifest.title_hint.clone();
    pathway.has_discussion_forum = manifest.has_discussion_forum;
    let mut creator = manifest.creator;
    creator.base_dir = base;
    Ok((pathway, creator))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathwayStats {
    pub total_resources: usize,
    pub total_words: u64,
    pub reading_time_minutes: f64,
    pub has_discussion_forum: bool,
    pub kind_counts: BTreeMap<ResourceKind, usize>,
}

/// Reading time is rounded up to one decimal place, so
/// `reading_time_minutes * wpm >= total_words` always holds.
pub fn compute_stats(pathway: &Pathway, reading_speed_wpm: f64) -> PathwayStats {
    assert!(reading_speed_wpm > 0.0, "reading speed must be positive");
    let total_words: u64 = pathway.resources().iter().map(|r| r.token_count as u64).sum();
    let mut kind_counts = BTreeMap::new();
    for r in pathway.resources() {
        *kind_counts.entry(r.meta.kind).or_default() += 1;
    }
    PathwayStats {
        total_resources: pathway.len(),
        total_words,
        reading_time_minutes: ceil_tenths(total_words as f64, reading_speed_wpm),
        has_discussion_forum: pathway.has_discussion_forum,
        kind_counts,
    }
}

// Smallest t = n/10 with t * rate >= words, evaluated in the same float
// arithmetic callers use to check it.
fn ceil_tenths(words: f64, rate: f64) -> f64 {
    let mut tenths = (words * 10.0 / rate).ceil();
    while tenths / 10.0 * rate < words {
        tenths += 1.0;
    }
    while tenths > 0.0 && (tenths - 1.0) / 10.0 * rate >= words {
        tenths -= 1.0;
    }
    tenths / 10.0
}
