//! SMS corpora, annotation sets and inter-annotator agreement.

mod kappa;
mod synthetic;

pub use kappa::{compute_kappa, kappa_from_rates, KappaReport};
pub use synthetic::{generate_synthetic_corpus, SemanticGroup, BUILTIN_LABELS};
pub(crate) use synthetic::{vocabulary, SEMANTIC_GROUPS};

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate message id {0:?}")]
    DuplicateId(String),
    #[error("message has an empty id")]
    EmptyId,
    #[error("message {0:?} has empty text")]
    EmptyText(String),
    #[error("annotator {annotator:?} labels message {id:?} twice")]
    DuplicateAnnotation { annotator: String, id: String },
    #[error("label set is empty")]
    NoLabels,
    #[error("per-label count must be at least 1")]
    ZeroPerLabel,
    #[error("annotators cover different message ids")]
    CoverageMismatch,
    #[error("no co-annotated messages")]
    NoSamples,
    #[error("label {0:?} is not in the label set")]
    UnknownLabel(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmsMessage {
    pub id: String,
    pub text: String,
    #[serde(default)]
    pub label: Option<String>,
}

impl SmsMessage {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: Option<String>) -> Self {
        Self {
            id: id.into(),
            text: text.into(),
            label,
        }
    }
}

/// Messages in file order plus the set of labels they carry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledCorpus {
    messages: Vec<SmsMessage>,
    labels: BTreeSet<String>,
}

impl LabeledCorpus {
    pub fn new(messages: Vec<SmsMessage>) -> Result<Self, CorpusError> {
        let mut seen = HashSet::with_capacity(messages.len());
        for m in &messages {
            if m.id.is_empty() {
                return Err(CorpusError::EmptyId);
            }
            if m.text.is_empty() {
                return Err(CorpusError::EmptyText(m.id.clone()));
            }
            if !seen.insert(m.id.as_str()) {
                return Err(CorpusError::DuplicateId(m.id.clone()));
            }
        }
        let labels = messages.iter().filter_map(|m| m.label.clone()).collect();
        Ok(Self { messages, labels })
    }

    pub fn messages(&self) -> &[SmsMessage] {
        &self.messages
    }

    pub fn labels(&self) -> &BTreeSet<String> {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    /// Message indices grouped by label, in corpus order.
    pub fn indices_by_label(&self) -> BTreeMap<&str, Vec<usize>> {
        let mut map: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
        for (i, m) in self.messages.iter().enumerate() {
            if let Some(label) = &m.label {
                map.entry(label.as_str()).or_default().push(i);
            }
        }
        map
    }

    /// Writes the corpus as JSON Lines.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for m in &self.messages {
            serde_json::to_writer(&mut out, m)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<LabeledCorpus, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_corpus(BufReader::new(file)).map_err(|e| with_path(e, path))
}

/// Parses a JSON Lines corpus. Blank lines are skipped.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<LabeledCorpus, CorpusError> {
    let mut messages = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: PathBuf::new(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let msg: SmsMessage = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            line: idx + 1,
            message: e.to_string(),
        })?;
        messages.push(msg);
    }
    LabeledCorpus::new(messages)
}

/// One annotator's labels keyed by message id.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AnnotationSet {
    pub annotator: String,
    pub assignments: BTreeMap<String, String>,
}

impl AnnotationSet {
    pub fn new(annotator: impl Into<String>) -> Self {
        Self {
            annotator: annotator.into(),
            assignments: BTreeMap::new(),
        }
    }

    pub fn assign(
        &mut self,
        id: impl Into<String>,
        label: impl Into<String>,
    ) -> Result<(), CorpusError> {
        let id = id.into();
        if self.assignments.contains_key(&id) {
            return Err(CorpusError::DuplicateAnnotation {
                annotator: self.annotator.clone(),
                id,
            });
        }
        self.assignments.insert(id, label.into());
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
struct AnnotationLine {
    id: String,
    annotator: String,
    label: String,
}

pub fn load_annotations(path: impl AsRef<Path>) -> Result<Vec<AnnotationSet>, CorpusError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_annotations(BufReader::new(file)).map_err(|e| with_path(e, path))
}

/// Parses annotation lines (`id`, `annotator`, `label`) into one set per
/// annotator, ordered by annotator name.
pub fn read_annotations<R: BufRead>(reader: R) -> Result<Vec<AnnotationSet>, CorpusError> {
    let mut sets: BTreeMap<String, AnnotationSet> = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| CorpusError::Io {
            path: PathBuf::new(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let entry: AnnotationLine =
            serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
                line: idx + 1,
                message: e.to_string(),
            })?;
        sets.entry(entry.annotator.clone())
            .or_insert_with(|| AnnotationSet::new(entry.annotator.clone()))
            .assign(entry.id, entry.label)?;
    }
    Ok(sets.into_values().collect())
}

fn with_path(err: CorpusError, path: &Path) -> CorpusError {
    match err {
        CorpusError::Io { source, .. } => CorpusError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    }
}
