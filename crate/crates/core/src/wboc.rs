//! Weighted bag of clusters.
//!
//! Every label owns a pool of word clusters built greedily from its tagged
//! keyword sequences. A cluster tracks how many word occurrences it absorbed
//! and the running mean of their vectors; out-of-vocabulary words form
//! null-centroid clusters keyed by their exact string.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embeddings::{cosine, EmbeddingTable, WordVector};
use crate::tagger::KeywordSequence;
use crate::Score;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("label {0:?} has no tagged messages")]
    EmptyTagged(String),
    #[error("threshold {0} is outside (0, 1]")]
    InvalidThreshold(f64),
    #[error("cluster centroid has {found} components, embeddings have {expected}")]
    CentroidDimension { expected: usize, found: usize },
    #[error("cluster frequency {frequency} does not match member counts {members}")]
    FrequencyMismatch { frequency: u32, members: u32 },
}

/// How the weighted sum of best-cluster similarities is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WbocDenominator {
    /// Sum of the frequencies of the clusters each test word matched.
    #[default]
    Selected,
    /// Sum of the frequencies of every cluster in the label.
    Literal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// Normalized member words with their occurrence counts.
    pub members: BTreeMap<String, u32>,
    pub frequency: u32,
    /// Mean of member vectors; `None` for an out-of-vocabulary cluster.
    pub centroid: Option<Vec<f64>>,
}

impl Cluster {
    fn seed(word: &str, vector: WordVector<'_>) -> Self {
        Self {
            members: BTreeMap::from([(word.to_string(), 1)]),
            frequency: 1,
            centroid: vector
                .as_slice()
                .map(|v| v.iter().map(|&x| f64::from(x)).collect()),
        }
    }

    fn absorb(&mut self, word: &str, vector: WordVector<'_>) {
        *self.members.entry(word.to_string()).or_default() += 1;
        self.frequency += 1;
        if let (Some(centroid), WordVector::Dense(v)) = (self.centroid.as_mut(), vector) {
            let n = f64::from(self.frequency);
            for (c, &x) in centroid.iter_mut().zip(v) {
                *c += (f64::from(x) - *c) / n;
            }
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.members.contains_key(word)
    }

    pub fn is_oov(&self) -> bool {
        self.centroid.is_none()
    }

    /// Similarity of a normalized word to this cluster: 1 for a member,
    /// cosine to the centroid when both are embedded, otherwise 0.
    pub fn similarity(&self, word: &str, vector: WordVector<'_>) -> f64 {
        if self.contains(word) {
            return 1.0;
        }
        match (&self.centroid, vector) {
            (Some(c), WordVector::Dense(v)) => cosine(c, v).unwrap_or(0.0),
            _ => 0.0,
        }
    }
}

/// Everything retained for one user label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelModel {
    pub label: String,
    pub clusters: Vec<Cluster>,
    pub tagged: Vec<KeywordSequence>,
}

pub(crate) fn check_threshold(tau: f64) -> Result<(), ModelError> {
    if tau > 0.0 && tau <= 1.0 {
        Ok(())
    } else {
        Err(ModelError::InvalidThreshold(tau))
    }
}

/// Clusters the tagged messages in order, words left to right.
pub fn build_label_model(
    label: &str,
    tagged: &[KeywordSequence],
    table: &EmbeddingTable,
    tau_cluster: f64,
) -> Result<LabelModel, ModelError> {
    if tagged.is_empty() {
        return Err(ModelError::EmptyTagged(label.to_string()));
    }
    let mut model = LabelModel::empty(label);
    for seq in tagged {
        model.add_message(seq.clone(), table, tau_cluster)?;
    }
    Ok(model)
}

impl LabelModel {
    pub fn empty(label: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            clusters: Vec::new(),
            tagged: Vec::new(),
        }
    }

    /// Streams one more tagged message into the clusters. The result equals a
    /// rebuild with the message appended to the tagged order.
    pub fn add_message(
        &mut self,
        keywords: KeywordSequence,
        table: &EmbeddingTable,
        tau_cluster: f64,
    ) -> Result<(), ModelError> {
        check_threshold(tau_cluster)?;
        for word in keywords.words() {
            let vector = table.lookup_normalized(word);
            match self.cluster_for(word, vector, tau_cluster) {
                Some(idx) => self.clusters[idx].absorb(word, vector),
                None => self.clusters.push(Cluster::seed(word, vector)),
            }
        }
        self.tagged.push(keywords);
        Ok(())
    }

    /// The cluster a word occurrence joins: the one already holding the word,
    /// else the embedded cluster with the highest centroid cosine at or above
    /// `tau` (earliest on ties).
    fn cluster_for(&self, word: &str, vector: WordVector<'_>, tau: f64) -> Option<usize> {
        if let Some(idx) = self.clusters.iter().position(|c| c.contains(word)) {
            return Some(idx);
        }
        let WordVector::Dense(v) = vector else {
            return None;
        };
        let mut best: Option<(usize, f64)> = None;
        for (idx, cluster) in self.clusters.iter().enumerate() {
            let Some(centroid) = &cluster.centroid else {
                continue;
            };
            let sim = cosine(centroid, v).unwrap_or(0.0);
            if sim >= tau && best.is_none_or(|(_, b)| sim > b) {
                best = Some((idx, sim));
            }
        }
        best.map(|(idx, _)| idx)
    }

    pub fn total_frequency(&self) -> u64 {
        self.clusters.iter().map(|c| u64::from(c.frequency)).sum()
    }

    /// Checks persisted clusters against the embedding dimension and their
    /// own member counts.
    pub fn validate(&self, dim: usize) -> Result<(), ModelError> {
        for c in &self.clusters {
            if let Some(centroid) = &c.centroid {
                if centroid.len() != dim {
                    return Err(ModelError::CentroidDimension {
                        expected: dim,
                        found: centroid.len(),
                    });
                }
            }
            let members: u32 = c.members.values().sum();
            if members != c.frequency {
                return Err(ModelError::FrequencyMismatch {
                    frequency: c.frequency,
                    members,
                });
            }
        }
        Ok(())
    }

    pub fn memory_bytes(&self) -> usize {
        let clusters: usize = self
            .clusters
            .iter()
            .map(|c| {
                std::mem::size_of::<Cluster>()
                    + c.members.keys().map(|k| k.len() + 48).sum::<usize>()
                    + c.centroid.as_ref().map_or(0, |v| v.len() * 8)
            })
            .sum();
        let tagged: usize = self
            .tagged
            .iter()
            .flat_map(|s| s.keywords.iter())
            .map(|t| t.surface.len() + t.normalized.len() + 64)
            .sum();
        clusters + tagged
    }
}

/// Frequency-weighted best-cluster similarity of `keywords` to the label.
///
/// Each test word takes its most similar cluster (negative similarities count
/// as 0) and contributes that similarity weighted by the cluster frequency.
pub fn wboc_score(
    model: &LabelModel,
    keywords: &KeywordSequence,
    table: &EmbeddingTable,
    denominator: WbocDenominator,
) -> Score {
    if model.clusters.is_empty() || keywords.is_empty() {
        return Score::degenerate();
    }
    let mut numerator = 0.0;
    let mut selected = 0.0;
    for word in keywords.words() {
        let vector = table.lookup_normalized(word);
        let mut best = 0;
        let mut best_sim = f64::NEG_INFINITY;
        for (idx, cluster) in model.clusters.iter().enumerate() {
            let sim = cluster.similarity(word, vector).max(0.0);
            if sim > best_sim {
                best = idx;
                best_sim = sim;
            }
        }
        let f = f64::from(model.clusters[best].frequency);
        numerator += f * best_sim;
        selected += f;
    }
    let denom = match denominator {
        WbocDenominator::Selected => selected,
        WbocDenominator::Literal => model.total_frequency() as f64,
    };
    Score::new((numerator / denom).clamp(0.0, 1.0))
}
