//! Confidence scoring and label prediction over a store of label models.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::SmsMessage;
use crate::csm::{csm_label_score, stasis_label_score};
use crate::embeddings::EmbeddingTable;
use crate::tagger::{KeywordSequence, Tagger, TaggerError};
use crate::wboc::{check_threshold, wboc_score, LabelModel, ModelError, WbocDenominator};

const FORMAT: &str = "smsim-model";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("model store has no labels")]
    EmptyStore,
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("score {0} is outside [0, 1]")]
    ScoreOutOfRange(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tagger(#[from] TaggerError),
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed model document: {0}")]
    Format(#[from] serde_json::Error),
    #[error("model was built with {model}-d embeddings but the table is {table}-d")]
    DimensionMismatch { model: usize, table: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Weight of the cluster score; `1 - alpha` goes to the sequence score.
    pub alpha: f64,
    pub tau_cluster: f64,
    pub tau_match: f64,
    pub confidence_threshold: f64,
    #[serde(default)]
    pub wboc_denominator: WbocDenominator,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            alpha: 0.8,
            tau_cluster: 0.7,
            tau_match: 0.7,
            confidence_threshold: 0.7,
            wboc_denominator: WbocDenominator::Selected,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let fields = [
            ("alpha", self.alpha),
            ("tau_cluster", self.tau_cluster),
            ("tau_match", self.tau_match),
            ("confidence_threshold", self.confidence_threshold),
        ];
        for (name, value) in fields {
            if check_threshold(value).is_err() {
                return Err(PipelineError::InvalidConfig(format!(
                    "{name} = {value} is outside (0, 1]"
                )));
            }
        }
        Ok(())
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }
}

/// `alpha * wboc + (1 - alpha) * csm`.
pub fn confidence(wboc: f64, csm: f64, alpha: f64) -> Result<f64, PipelineError> {
    for s in [wboc, csm] {
        if !(0.0..=1.0).contains(&s) {
            return Err(PipelineError::ScoreOutOfRange(s));
        }
    }
    check_threshold(alpha)
        .map_err(|_| PipelineError::InvalidConfig(format!("alpha = {alpha} is outside (0, 1]")))?;
    Ok(mix(wboc, csm, alpha))
}

pub(crate) fn mix(wboc: f64, csm: f64, alpha: f64) -> f64 {
    alpha * wboc + (1.0 - alpha) * csm
}

/// Which word-order measure fills the sequence half of the confidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SequenceScorer {
    Csm,
    Stasis,
    /// Sequence score fixed at 0.
    Disabled,
}

/// Alpha-independent scores of one message against one label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelScores {
    pub label: String,
    pub wboc: f64,
    pub csm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredLabel {
    pub label: String,
    pub wboc: f64,
    pub csm: f64,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionResult {
    /// One entry per label, in label order.
    pub labels: Vec<ScoredLabel>,
    pub chosen: Option<String>,
    pub confidence: Option<f64>,
}

/// Applies the confidence mix and the rejection threshold.
pub fn decide(scores: &[LabelScores], alpha: f64, threshold: f64) -> PredictionResult {
    let labels: Vec<ScoredLabel> = scores
        .iter()
        .map(|s| ScoredLabel {
            label: s.label.clone(),
            wboc: s.wboc,
            csm: s.csm,
            confidence: mix(s.wboc, s.csm, alpha),
        })
        .collect();
    let chosen = pick_label(
        labels.iter().map(|s| (s.label.as_str(), s.confidence)),
        threshold,
    )
    .map(|(l, c)| (l.to_string(), c));
    PredictionResult {
        confidence: chosen.as_ref().map(|c| c.1),
        chosen: chosen.map(|c| c.0),
        labels,
    }
}

/// Highest-confidence label if it clears `threshold`; ties go to the
/// lexicographically smallest name.
pub fn pick_label<'a, I>(candidates: I, threshold: f64) -> Option<(&'a str, f64)>
where
    I: IntoIterator<Item = (&'a str, f64)>,
{
    let mut best: Option<(&str, f64)> = None;
    for (label, conf) in candidates {
        let better = match best {
            None => true,
            Some((bl, bc)) => conf > bc || (conf == bc && label < bl),
        };
        if better {
            best = Some((label, conf));
        }
    }
    best.filter(|&(_, c)| c >= threshold)
}

/// All user labels with their models, under one config and embedding table.
#[derive(Debug, Clone)]
pub struct ModelStore {
    config: PipelineConfig,
    labels: BTreeMap<String, LabelModel>,
    table: Arc<EmbeddingTable>,
}

#[derive(Serialize, Deserialize)]
struct StoreDocument {
    format: String,
    version: u32,
    dim: usize,
    config: PipelineConfig,
    labels: BTreeMap<String, LabelModel>,
}

impl ModelStore {
    pub fn new(config: PipelineConfig, table: Arc<EmbeddingTable>) -> Result<Self, PipelineError> {
        config.validate()?;
        Ok(Self {
            config,
            labels: BTreeMap::new(),
            table,
        })
    }

    /// Builds a store from `(label, keywords)` pairs, each label clustering its
    /// messages in the given order.
    pub fn build<I>(
        config: PipelineConfig,
        table: Arc<EmbeddingTable>,
        tagged: I,
    ) -> Result<Self, PipelineError>
    where
        I: IntoIterator<Item = (String, KeywordSequence)>,
    {
        let mut store = Self::new(config, table)?;
        for (label, keywords) in tagged {
            store.assign_keywords(&label, keywords)?;
        }
        Ok(store)
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// Replaces decision parameters. Clustering thresholds of existing models
    /// are not revisited.
    pub fn set_config(&mut self, config: PipelineConfig) -> Result<(), PipelineError> {
        config.validate()?;
        self.config = config;
        Ok(())
    }

    pub fn table(&self) -> &Arc<EmbeddingTable> {
        &self.table
    }

    pub fn labels(&self) -> &BTreeMap<String, LabelModel> {
        &self.labels
    }

    pub fn label(&self, name: &str) -> Option<&LabelModel> {
        self.labels.get(name)
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn assign_keywords(
        &mut self,
        label: &str,
        keywords: KeywordSequence,
    ) -> Result<(), PipelineError> {
        let tau = self.config.tau_cluster;
        self.labels
            .entry(label.to_string())
            .or_insert_with(|| LabelModel::empty(label))
            .add_message(keywords, &self.table, tau)?;
        Ok(())
    }

    /// Tags `message` under `label`, creating the label if needed.
    pub fn assign(
        &mut self,
        message: &SmsMessage,
        label: &str,
        tagger: &Tagger,
    ) -> Result<(), PipelineError> {
        let keywords = tagger.keywords(Some(&message.id), &message.text)?;
        self.assign_keywords(label, keywords)
    }

    pub fn assign_text(
        &mut self,
        label: &str,
        text: &str,
        tagger: &Tagger,
    ) -> Result<(), PipelineError> {
        let keywords = tagger.keywords(None, text)?;
        self.assign_keywords(label, keywords)
    }

    /// Cluster and sequence scores of `keywords` against every label.
    pub fn score_keywords(
        &self,
        keywords: &KeywordSequence,
        scorer: SequenceScorer,
    ) -> Result<Vec<LabelScores>, PipelineError> {
        if self.labels.is_empty() {
            return Err(PipelineError::EmptyStore);
        }
        let cfg = &self.config;
        self.labels
            .values()
            .map(|model| {
                let wboc = wboc_score(model, keywords, &self.table, cfg.wboc_denominator).value;
                let csm = match scorer {
                    SequenceScorer::Csm => {
                        csm_label_score(model, keywords, &self.table, cfg.tau_match)?
                    }
                    SequenceScorer::Stasis => {
                        stasis_label_score(model, keywords, &self.table, cfg.tau_match)?
                    }
                    SequenceScorer::Disabled => 0.0,
                };
                Ok(LabelScores {
                    label: model.label.clone(),
                    wboc,
                    csm,
                })
            })
            .collect()
    }

    pub fn predict_keywords(
        &self,
        keywords: &KeywordSequence,
    ) -> Result<PredictionResult, PipelineError> {
        let scores = self.score_keywords(keywords, SequenceScorer::Csm)?;
        Ok(decide(
            &scores,
            self.config.alpha,
            self.config.confidence_threshold,
        ))
    }

    pub fn predict(
        &self,
        message: &SmsMessage,
        tagger: &Tagger,
    ) -> Result<PredictionResult, PipelineError> {
        if self.labels.is_empty() {
            return Err(PipelineError::EmptyStore);
        }
        let keywords = tagger.keywords(Some(&message.id), &message.text)?;
        self.predict_keywords(&keywords)
    }

    pub fn predict_text(
        &self,
        text: &str,
        tagger: &Tagger,
    ) -> Result<PredictionResult, PipelineError> {
        if self.labels.is_empty() {
            return Err(PipelineError::EmptyStore);
        }
        let keywords = tagger.keywords(None, text)?;
        self.predict_keywords(&keywords)
    }

    /// Approximate bytes held by the label models (the embedding table is
    /// shared and not counted).
    pub fn memory_bytes(&self) -> usize {
        self.labels.values().map(LabelModel::memory_bytes).sum()
    }

    pub fn to_json(&self) -> String {
        let doc = StoreDocument {
            format: FORMAT.to_string(),
            version: VERSION,
            dim: self.table.dim(),
            config: self.config,
            labels: self.labels.clone(),
        };
        let mut text = serde_json::to_string(&doc).expect("store serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str, table: Arc<EmbeddingTable>) -> Result<Self, PipelineError> {
        let doc: StoreDocument = serde_json::from_str(text)?;
        if doc.format != FORMAT || doc.version != VERSION {
            return Err(PipelineError::InvalidConfig(format!(
                "unsupported document {:?} version {}",
                doc.format, doc.version
            )));
        }
        if doc.dim != table.dim() {
            return Err(PipelineError::DimensionMismatch {
                model: doc.dim,
                table: table.dim(),
            });
        }
        doc.config.validate()?;
        for model in doc.labels.values() {
            model.validate(table.dim())?;
        }
        Ok(Self {
            config: doc.config,
            labels: doc.labels,
            table,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PipelineError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: impl AsRef<Path>, table: Arc<EmbeddingTable>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text, table)
    }
}
