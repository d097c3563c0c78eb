//! Outline text selection.
//!
//! Eligible resources are exact-deduplicated, then pruned twice by the
//! duplicates filter (syntactic Jaccard stage, then semantic cosine stage),
//! each stage with its own adaptive threshold. The survivors get titles; the
//! first and last are pinned and the interior is split into `K - 2`
//! contiguous bins with one seeded sample per bin.
//!
//! All indices in this module are 1-based pathway positions.

use std::collections::{BTreeMap, HashSet};
use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adapters::{AdapterError, AdapterRegistry};
use crate::corpus::{Pathway, ResourceKind};
use crate::rng;
use crate::textmetrics::{cosine, normalize, tokenize, EmbeddingVector, TokenSet, SIMILARITY_TOKEN_LIMIT};

pub const DEFAULT_MIN_TOKENS_SHORT_DOC: usize = 120;

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("only {eligible} eligible resource(s); an outline needs at least 2")]
    TooFewEligible { eligible: usize },
    #[error(transparent)]
    Adapter(#[from] AdapterError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    Jaccard,
    Cosine,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    /// K: outline slots the template needs.
    pub k_required: usize,
    pub threshold_grid: Vec<f64>,
    pub min_tokens_short_doc: usize,
    pub rng_seed: u64,
}

impl FilterConfig {
    pub fn new(k_required: usize) -> Self {
        assert!(k_required >= 2, "an outline needs at least two slots");
        FilterConfig {
            k_required,
            threshold_grid: default_grid(),
            min_tokens_short_doc: DEFAULT_MIN_TOKENS_SHORT_DOC,
            rng_seed: 0,
        }
    }
}

/// 0.0, 0.1, ..., 1.0
pub fn default_grid() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

/// Pairwise similarity between pathway positions.
pub trait Similarity {
    fn score(&self, a: usize, b: usize) -> f64;
}

impl<F: Fn(usize, usize) -> f64> Similarity for F {
    fn score(&self, a: usize, b: usize) -> f64 {
        self(a, b)
    }
}

// Scores are snapped to 1e-12 so rounding noise cannot flip a strict
// comparison against a grid threshold.
fn snap(score: f64) -> f64 {
    (score * 1e12).round() / 1e12
}

fn similarity_tokens(pathway: &Pathway, position: usize) -> Vec<String> {
    let mut tokens = tokenize(&pathway.at(position).text);
    tokens.truncate(SIMILARITY_TOKEN_LIMIT);
    tokens
}

/// Jaccard over the word sets of the (truncated) resource texts.
pub struct JaccardScorer {
    sets: BTreeMap<usize, TokenSet>,
}

impl JaccardScorer {
    pub fn new(pathway: &Pathway, indices: &[usize]) -> Self {
        JaccardScorer {
            sets: indices
                .iter()
                .map(|&i| (i, TokenSet::from_tokens(similarity_tokens(pathway, i))))
                .collect(),
        }
    }
}

impl Similarity for JaccardScorer {
    fn score(&self, a: usize, b: usize) -> f64 {
        snap(crate::textmetrics::jaccard(&self.sets[&a], &self.sets[&b]))
    }
}

/// Cosine over embedding vectors. A zero vector scores 0 against anything.
pub struct CosineScorer {
    vectors: BTreeMap<usize, EmbeddingVector>,
}

impl CosineScorer {
    pub fn from_vectors(vectors: BTreeMap<usize, EmbeddingVector>) -> Self {
        CosineScorer { vectors }
    }

    /// Embeds the truncated texts through the registry's `embed` capability.
    pub fn embed(
        pathway: &Pathway,
        indices: &[usize],
        adapters: &AdapterRegistry,
    ) -> Result<Self, AdapterError> {
        let texts: Vec<String> = indices.iter().map(|&i| similarity_tokens(pathway, i).join(" ")).collect();
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let vectors = adapters.embed(&refs)?;
        Ok(Self::from_vectors(indices.iter().copied().zip(vectors).collect()))
    }
}

impl Similarity for CosineScorer {
    fn score(&self, a: usize, b: usize) -> f64 {
        cosine(&self.vectors[&a], &self.vectors[&b]).map(snap).unwrap_or(0.0)
    }
}

/// Assessments and documents shorter than `min_tokens_short_doc` are dropped.
pub fn eligible_resources(pathway: &Pathway, cfg: &FilterConfig) -> Result<Vec<usize>, SelectionError> {
    let eligible: Vec<usize> = pathway
        .resources()
        .iter()
        .filter(|r| r.meta.kind != ResourceKind::Assessment && r.token_count >= cfg.min_tokens_short_doc)
        .map(|r| r.meta.order)
        .collect();
    if eligible.len() < 2 {
        return Err(SelectionError::TooFewEligible { eligible: eligible.len() });
    }
    Ok(eligible)
}

/// Keeps the first occurrence of each normalized text. The last index is
/// pinned: an earlier copy of it is dropped instead of the last itself.
pub fn exact_dedup(indices: &[usize], pathway: &Pathway) -> Vec<usize> {
    let Some((&last, head)) = indices.split_last() else {
        return Vec::new();
    };
    let last_text = normalize(&pathway.at(last).text);
    let mut seen = HashSet::new();
    let mut kept: Vec<usize> = head
        .iter()
        .copied()
        .filter(|&i| {
            let text = normalize(&pathway.at(i).text);
            if i != indices[0] && text == last_text {
                return false;
            }
            seen.insert(text)
        })
        .collect();
    kept.push(last);
    kept
}

/// Greedy scan: first and last are retained up front; each interior index is
/// retained iff its maximum similarity to everything retained so far is
/// strictly below `threshold`. Output is in pathway order.
pub fn duplicates_filter<S: Similarity + ?Sized>(indices: &[usize], sim: &S, threshold: f64) -> Vec<usize> {
    if indices.len() <= 2 {
        return indices.to_vec();
    }
    let mut retained = vec![indices[0], indices[indices.len() - 1]];
    for &i in &indices[1..indices.len() - 1] {
        let max = retained
            .iter()
            .map(|&r| sim.score(i, r))
            .fold(f64::NEG_INFINITY, f64::max);
        if max < threshold {
            retained.push(i);
        }
    }
    retained.sort_unstable();
    retained
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCount {
    pub threshold: f64,
    pub retained: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterOutcome {
    pub stage: Measure,
    pub retained_indices: Vec<usize>,
    pub chosen_threshold: f64,
    /// No grid threshold kept K items; everything was retained.
    pub fallback: bool,
    pub scan: Vec<ThresholdCount>,
}

/// Runs the filter at every grid threshold and keeps the smallest retained
/// set that still has at least K items (ties go to the lower threshold).
pub fn adaptive_threshold_search<S: Similarity + ?Sized>(
    indices: &[usize],
    sim: &S,
    cfg: &FilterConfig,
    measure: Measure,
) -> FilterOutcome {
    let mut scan = Vec::with_capacity(cfg.threshold_grid.len());
    let mut best: Option<(f64, Vec<usize>)> = None;
    for &t in &cfg.threshold_grid {
        let retained = duplicates_filter(indices, sim, t);
        scan.push(ThresholdCount { threshold: t, retained: retained.len() });
        if retained.len() < cfg.k_required {
            continue;
        }
        if best.as_ref().is_none_or(|(_, b)| retained.len() < b.len()) {
            best = Some((t, retained));
        }
    }
    match best {
        Some((threshold, retained)) => FilterOutcome {
            stage: measure,
            retained_indices: retained,
            chosen_threshold: threshold,
            fallback: false,
            scan,
        },
        None => FilterOutcome {
            stage: measure,
            retained_indices: indices.to_vec(),
            chosen_threshold: 1.0,
            fallback: true,
            scan,
        },
    }
}

/// Contiguous ranges over `0..count`; earlier bins take the remainder.
pub fn bin_partition(count: usize, bins: usize) -> Vec<Range<usize>> {
    assert!(bins >= 1, "need at least one bin");
    let base = count / bins;
    let extra = count % bins;
    let mut start = 0;
    (0..bins)
        .map(|b| {
            let len = base + usize::from(b < extra);
            let range = start..start + len;
            start += len;
            range
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlineEntry {
    pub resource_index: usize,
    pub outline_text: String,
}

/// One interior bin as pathway positions, with the sampled position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinRecord {
    pub positions: Vec<usize>,
    pub sampled: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutlineSelection {
    pub entries: Vec<OutlineEntry>,
    pub bins: Vec<BinRecord>,
    pub eligible: Vec<usize>,
    pub after_exact_dedup: Vec<usize>,
    pub outcomes: Vec<FilterOutcome>,
}

fn resource_title(pathway: &Pathway, position: usize, adapters: &AdapterRegistry) -> Result<String, AdapterError> {
    let resource = pathway.at(position);
    match &resource.meta.title_hint {
        Some(hint) => Ok(hint.clone()),
        None => adapters.title(&resource.text),
    }
}

pub fn select_outline(
    pathway: &Pathway,
    cfg: &FilterConfig,
    adapters: &AdapterRegistry,
) -> Result<OutlineSelection, SelectionError> {
    let eligible = eligible_resources(pathway, cfg)?;
    let after_exact_dedup = exact_dedup(&eligible, pathway);

    let jaccard = JaccardScorer::new(pathway, &after_exact_dedup);
    let syntactic = adaptive_threshold_search(&after_exact_dedup, &jaccard, cfg, Measure::Jaccard);

    let cosine = CosineScorer::embed(pathway, &syntactic.retained_indices, adapters)?;
    let semantic =
        adaptive_threshold_search(&syntactic.retained_indices, &cosine, cfg, Measure::Cosine);
    let survivors = semantic.retained_indices.clone();

    let titles: BTreeMap<usize, String> = survivors
        .iter()
        .map(|&i| resource_title(pathway, i, adapters).map(|t| (i, t)))
        .collect::<Result<_, _>>()?;

    let mut bins = Vec::new();
    let chosen: Vec<usize> = if survivors.len() <= cfg.k_required {
        survivors.clone()
    } else {
        let interior = &survivors[1..survivors.len() - 1];
        let mut rng = rng::stream(cfg.rng_seed, "bins");
        let mut picked = vec![survivors[0]];
        // K = 2 leaves no interior bins
        let ranges = match cfg.k_required - 2 {
            0 => Vec::new(),
            bins => bin_partition(interior.len(), bins),
        };
        for range in ranges {
            let positions = interior[range.clone()].to_vec();
            let sampled = if range.is_empty() {
                None
            } else {
                Some(interior[rng.gen_range(range)])
            };
            picked.extend(sampled);
            bins.push(BinRecord { positions, sampled });
        }
        picked.push(survivors[survivors.len() - 1]);
        picked
    };

    let entries = chosen
        .into_iter()
        .map(|i| OutlineEntry { resource_index: i, outline_text: titles[&i].clone() })
        .collect();
    Ok(OutlineSelection {
        entries,
        bins,
        eligible,
        after_exact_dedup,
        outcomes: vec![syntactic, semantic],
    })
}
