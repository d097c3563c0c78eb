//! Tokenization, term statistics and the two similarity measures used by
//! outline selection: Jaccard over word sets and cosine over embedding
//! vectors (built-in backend: a corpus-fit TF-IDF model).

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Resource texts are cut to this many tokens before pairwise similarity.
pub const SIMILARITY_TOKEN_LIMIT: usize = 2000;

const BUNDLED_STOPWORDS: &str = include_str!("../data/stopwords.txt");

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("vector dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("cosine is undefined for an all-zero vector")]
    ZeroVector,
    #[error("cannot fit TF-IDF on an empty corpus")]
    EmptyCorpus,
}

/// Lowercase word tokens. Any character that is not alphanumeric delimits.
pub fn tokenize(text: &str) -> Vec<String> {
    // Fold case before splitting: lowercasing can emit combining marks.
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_string)
        .collect()
}

/// Tokens joined by single spaces; the normal form used for exact dedup.
pub fn normalize(text: &str) -> String {
    tokenize(text).join(" ")
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TokenSet(BTreeSet<String>);

impl TokenSet {
    pub fn from_text(text: &str) -> Self {
        Self::from_tokens(tokenize(text))
    }

    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        TokenSet(
            tokens
                .into_iter()
                .map(|t| t.as_ref().to_lowercase())
                .filter(|t| !t.is_empty())
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.0.iter().map(String::as_str)
    }

    /// `(|a ∩ b|, |a ∪ b|)`.
    pub fn overlap(&self, other: &TokenSet) -> (usize, usize) {
        let inter = self.0.intersection(&other.0).count();
        (inter, self.0.len() + other.0.len() - inter)
    }
}

/// Intersection over union; two empty sets are identical and score 1.0.
pub fn jaccard(a: &TokenSet, b: &TokenSet) -> f64 {
    let (inter, union) = a.overlap(b);
    if union == 0 {
        return 1.0;
    }
    inter as f64 / union as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(pub Vec<f64>);

impl EmbeddingVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|v| *v == 0.0)
    }

    fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

pub fn cosine(u: &EmbeddingVector, v: &EmbeddingVector) -> Result<f64, MetricsError> {
    if u.dim() != v.dim() {
        return Err(MetricsError::DimensionMismatch(u.dim(), v.dim()));
    }
    if u.is_zero() || v.is_zero() {
        return Err(MetricsError::ZeroVector);
    }
    let dot: f64 = u.0.iter().zip(&v.0).map(|(a, b)| a * b).sum();
    Ok((dot / (u.norm() * v.norm())).clamp(-1.0, 1.0))
}

/// Fitted TF-IDF state. Raw term counts, smoothed idf
/// `ln((1 + D) / (1 + df)) + 1`, vocabulary in lexicographic order.
#[derive(Debug, Clone)]
pub struct TfIdfModel {
    vocab: BTreeMap<String, usize>,
    idf: Vec<f64>,
}

impl TfIdfModel {
    pub fn fit<S: AsRef<str>>(corpus: &[Vec<S>]) -> Result<Self, MetricsError> {
        if corpus.is_empty() {
            return Err(MetricsError::EmptyCorpus);
        }
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for doc in corpus {
            let unique: BTreeSet<&str> = doc.iter().map(AsRef::as_ref).collect();
            for term in unique {
                *df.entry(term.to_string()).or_default() += 1;
            }
        }
        let docs = corpus.len() as f64;
        let mut vocab = BTreeMap::new();
        let mut idf = Vec::with_capacity(df.len());
        for (i, (term, count)) in df.into_iter().enumerate() {
            idf.push(((1.0 + docs) / (1.0 + count as f64)).ln() + 1.0);
            vocab.insert(term, i);
        }
        Ok(TfIdfModel { vocab, idf })
    }

    pub fn dim(&self) -> usize {
        self.idf.len()
    }

    pub fn idf(&self, term: &str) -> Option<f64> {
        self.vocab.get(term).map(|&i| self.idf[i])
    }

    pub fn embed(&self, text: &str) -> EmbeddingVector {
        self.embed_tokens(&tokenize(text))
    }

    /// Out-of-vocabulary tokens are ignored.
    pub fn embed_tokens<S: AsRef<str>>(&self, tokens: &[S]) -> EmbeddingVector {
        let mut values = vec![0.0; self.idf.len()];
        for token in tokens {
            if let Some(&i) = self.vocab.get(token.as_ref()) {
                values[i] += 1.0;
            }
        }
        for (v, idf) in values.iter_mut().zip(&self.idf) {
            *v *= idf;
        }
        EmbeddingVector(values)
    }
}

#[derive(Debug, Clone)]
pub struct StopWords(HashSet<String>);

impl StopWords {
    /// The bundled English list.
    pub fn english() -> Self {
        Self::parse(BUNDLED_STOPWORDS)
    }

    pub fn empty() -> Self {
        StopWords(HashSet::new())
    }

    /// One lowercase token per line; blank lines ignored.
    pub fn parse(content: &str) -> Self {
        StopWords(
            content
                .lines()
                .map(|l| l.trim().to_lowercase())
                .filter(|l| !l.is_empty())
                .collect(),
        )
    }

    pub fn from_file(path: &Path) -> std::io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }

    pub fn contains(&self, token: &str) -> bool {
        self.0.contains(token)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<S: Into<String>> FromIterator<S> for StopWords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        StopWords(iter.into_iter().map(Into::into).collect())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TermFrequencyTable {
    pub counts: BTreeMap<String, u64>,
    pub total: u64,
}

impl TermFrequencyTable {
    pub fn count(&self, term: &str) -> u64 {
        self.counts.get(term).copied().unwrap_or(0)
    }

    /// Relative frequency `count / total`; 0 for an empty table.
    pub fn frequency(&self, term: &str) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.count(term) as f64 / self.total as f64
    }

    /// Highest counts first, ties broken by term.
    pub fn top_k(&self, k: usize) -> Vec<(String, u64)> {
        let mut entries: Vec<(String, u64)> =
            self.counts.iter().map(|(t, c)| (t.clone(), *c)).collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        entries.truncate(k);
        entries
    }
}

pub fn term_frequencies<S: AsRef<str>>(texts: &[S], stopwords: &StopWords) -> TermFrequencyTable {
    let mut table = TermFrequencyTable::default();
    for text in texts {
        for token in tokenize(text.as_ref()) {
            if stopwords.contains(&token) {
                continue;
            }
            *table.counts.entry(token).or_default() += 1;
            table.total += 1;
        }
    }
    table
}
