//! Tokenization, coarse part-of-speech tagging and keyword extraction.
//!
//! The default tagger is a lexicon with suffix heuristics. Emission scores
//! produced elsewhere (for example by a neural sequence model) can be decoded
//! with [`viterbi_decode`] instead.

mod lexicon;
mod viterbi;

pub use lexicon::{load_lexicon, LexiconTagger};
pub use viterbi::{viterbi_decode, ViterbiModel};

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TaggerError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("unknown tag {0:?}")]
    UnknownTag(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("emission matrix is empty")]
    EmptyEmissions,
    #[error("emission row {row} has {found} scores, expected {expected}")]
    EmissionWidth {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("{rows} emission rows for {tokens} tokens")]
    EmissionCount { rows: usize, tokens: usize },
    #[error("no emissions for message {0:?}")]
    MissingEmissions(String),
    #[error("emission tag set for {id:?} does not match the transition model")]
    TagSetMismatch { id: String },
}

/// Coarse part-of-speech tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Tag {
    Noun,
    Propn,
    Verb,
    Adj,
    Adv,
    Adp,
    Conj,
    Pron,
    Det,
    Num,
    Other,
}

impl Tag {
    pub const ALL: [Tag; 11] = [
        Tag::Noun,
        Tag::Propn,
        Tag::Verb,
        Tag::Adj,
        Tag::Adv,
        Tag::Adp,
        Tag::Conj,
        Tag::Pron,
        Tag::Det,
        Tag::Num,
        Tag::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Tag::Noun => "NOUN",
            Tag::Propn => "PROPN",
            Tag::Verb => "VERB",
            Tag::Adj => "ADJ",
            Tag::Adv => "ADV",
            Tag::Adp => "ADP",
            Tag::Conj => "CONJ",
            Tag::Pron => "PRON",
            Tag::Det => "DET",
            Tag::Num => "NUM",
            Tag::Other => "OTHER",
        }
    }

    /// Nouns, proper nouns and verbs survive keyword filtering.
    pub fn is_keyword(self) -> bool {
        matches!(self, Tag::Noun | Tag::Propn | Tag::Verb)
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tag {
    type Err = TaggerError;

    /// Accepts the coarse names and Penn Treebank tags.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let upper = s.trim().to_ascii_uppercase();
        if let Some(tag) = Tag::ALL.iter().find(|t| t.as_str() == upper) {
            return Ok(*tag);
        }
        let tag = match upper.as_str() {
            "NNP" | "NNPS" => Tag::Propn,
            "NN" | "NNS" => Tag::Noun,
            "VB" | "VBD" | "VBG" | "VBN" | "VBP" | "VBZ" | "MD" | "AUX" => Tag::Verb,
            "JJ" | "JJR" | "JJS" => Tag::Adj,
            "RB" | "RBR" | "RBS" | "WRB" => Tag::Adv,
            "IN" | "TO" | "RP" => Tag::Adp,
            "CC" | "CCONJ" | "SCONJ" => Tag::Conj,
            "PRP" | "PRP$" | "WP" | "WP$" => Tag::Pron,
            "DT" | "PDT" | "WDT" => Tag::Det,
            "CD" => Tag::Num,
            "X" | "SYM" | "PUNCT" | "INTJ" | "FW" | "UH" | "LS" | "POS" | "EX" | "O" => Tag::Other,
            _ => return Err(TaggerError::UnknownTag(s.to_string())),
        };
        Ok(tag)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub normalized: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<Tag>,
}

impl Token {
    pub fn new(surface: impl Into<String>) -> Self {
        let surface = surface.into();
        let normalized = surface.to_lowercase();
        Self {
            surface,
            normalized,
            tag: None,
        }
    }

    pub fn with_tag(mut self, tag: Tag) -> Self {
        self.tag = Some(tag);
        self
    }
}

/// Ordered keywords of one message.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeywordSequence {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_id: Option<String>,
    pub keywords: Vec<Token>,
}

impl KeywordSequence {
    pub fn new(source_id: Option<String>, keywords: Vec<Token>) -> Self {
        Self {
            source_id,
            keywords,
        }
    }

    /// Untagged sequence from bare words, mostly for tests and tooling.
    pub fn from_words<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::new(None, words.into_iter().map(Token::new).collect())
    }

    pub fn len(&self) -> usize {
        self.keywords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keywords.is_empty()
    }

    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.keywords.iter().map(|t| t.normalized.as_str())
    }
}

/// Splits text into maximal letter runs and maximal digit runs. A `.` or `,`
/// strictly between two digits stays inside the number. Everything else
/// separates tokens and is dropped.
pub fn tokenize(text: &str) -> Vec<Token> {
    #[derive(PartialEq, Clone, Copy)]
    enum Kind {
        Letters,
        Digits,
    }

    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut tokens = Vec::new();
    let mut start: Option<(usize, Kind)> = None;

    let flush = |tokens: &mut Vec<Token>, begin: usize, end: usize| {
        tokens.push(Token::new(&text[begin..end]));
    };

    for (pos, &(byte, c)) in chars.iter().enumerate() {
        let kind = if c.is_alphabetic() {
            Some(Kind::Letters)
        } else if c.is_ascii_digit() {
            Some(Kind::Digits)
        } else {
            None
        };
        match (start, kind) {
            (Some((_, cur)), Some(k)) if cur == k => {}
            (Some((_, Kind::Digits)), None)
                if (c == '.' || c == ',')
                    && chars.get(pos + 1).is_some_and(|&(_, n)| n.is_ascii_digit()) => {}
            (Some((begin, _)), k) => {
                flush(&mut tokens, begin, byte);
                start = k.map(|k| (byte, k));
            }
            (None, k) => start = k.map(|k| (byte, k)),
        }
    }
    if let Some((begin, _)) = start {
        flush(&mut tokens, begin, text.len());
    }
    tokens
}

/// Per-message emission scores exported by an external model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmissionRecord {
    pub id: String,
    pub emissions: Vec<Vec<f64>>,
    pub tags: Vec<String>,
}

/// Borrowed tagging strategy for a single token sequence.
#[derive(Debug, Clone, Copy)]
pub enum TaggerChoice<'a> {
    Lexicon(&'a LexiconTagger),
    Emissions {
        emissions: &'a [Vec<f64>],
        model: &'a ViterbiModel,
    },
}

/// Assigns exactly one tag to every token.
pub fn tag_tokens(tokens: &[Token], tagger: TaggerChoice<'_>) -> Result<Vec<Token>, TaggerError> {
    match tagger {
        TaggerChoice::Lexicon(lexicon) => Ok(lexicon.tag(tokens)),
        TaggerChoice::Emissions { emissions, model } => {
            if emissions.len() != tokens.len() {
                return Err(TaggerError::EmissionCount {
                    rows: emissions.len(),
                    tokens: tokens.len(),
                });
            }
            if tokens.is_empty() {
                return Ok(Vec::new());
            }
            if model.tags.len() != model.num_tags() {
                return Err(TaggerError::InvalidModel("model has no tag names".into()));
            }
            let path = viterbi_decode(emissions, model)?;
            Ok(tokens
                .iter()
                .zip(path)
                .map(|(tok, idx)| tok.clone().with_tag(model.tags[idx]))
                .collect())
        }
    }
}

/// Tokenizes, tags and keeps nouns, proper nouns and verbs in order. When
/// nothing survives but the text had tokens, every token is returned.
pub fn extract_keywords(
    text: &str,
    tagger: TaggerChoice<'_>,
) -> Result<KeywordSequence, TaggerError> {
    let tokens = tokenize(text);
    let tagged = tag_tokens(&tokens, tagger)?;
    Ok(KeywordSequence::new(None, filter_keywords(tagged)))
}

fn filter_keywords(tagged: Vec<Token>) -> Vec<Token> {
    if tagged.iter().any(|t| t.tag.is_some_and(Tag::is_keyword)) {
        tagged
            .into_iter()
            .filter(|t| t.tag.is_some_and(Tag::is_keyword))
            .collect()
    } else {
        tagged
    }
}

/// Owned tagger used by the pipeline: either the lexicon tagger or a set of
/// externally produced emissions keyed by message id.
#[derive(Debug, Clone)]
pub enum Tagger {
    Lexicon(LexiconTagger),
    External(ExternalTagger),
}

impl Default for Tagger {
    fn default() -> Self {
        Tagger::Lexicon(LexiconTagger::default())
    }
}

impl Tagger {
    /// Extracts keywords for a message; external emissions are looked up by id.
    pub fn keywords(&self, id: Option<&str>, text: &str) -> Result<KeywordSequence, TaggerError> {
        let mut seq = match self {
            Tagger::Lexicon(lexicon) => extract_keywords(text, TaggerChoice::Lexicon(lexicon))?,
            Tagger::External(external) => {
                let id = id.ok_or_else(|| TaggerError::MissingEmissions(String::new()))?;
                let (emissions, model) = external.for_message(id)?;
                extract_keywords(text, TaggerChoice::Emissions { emissions, model })?
            }
        };
        seq.source_id = id.map(str::to_string);
        Ok(seq)
    }
}

#[derive(Debug, Clone)]
pub struct ExternalTagger {
    transitions: Option<ViterbiModel>,
    records: HashMap<String, (Vec<Vec<f64>>, ViterbiModel)>,
}

impl ExternalTagger {
    /// Pairs emission records with an optional transition model. Without one,
    /// each record decodes under zero start and transition scores.
    pub fn new(
        records: Vec<EmissionRecord>,
        transitions: Option<ViterbiModel>,
    ) -> Result<Self, TaggerError> {
        if let Some(model) = &transitions {
            model.validate()?;
        }
        let mut map = HashMap::new();
        for record in records {
            let tags = record
                .tags
                .iter()
                .map(|t| t.parse())
                .collect::<Result<Vec<Tag>, _>>()?;
            let model = match &transitions {
                Some(model) if model.tags == tags => model.clone(),
                Some(_) => return Err(TaggerError::TagSetMismatch { id: record.id }),
                None => ViterbiModel::uniform(tags),
            };
            map.insert(record.id, (record.emissions, model));
        }
        Ok(Self {
            transitions,
            records: map,
        })
    }

    pub fn transitions(&self) -> Option<&ViterbiModel> {
        self.transitions.as_ref()
    }

    pub fn for_message(&self, id: &str) -> Result<(&[Vec<f64>], &ViterbiModel), TaggerError> {
        self.records
            .get(id)
            .map(|(e, m)| (e.as_slice(), m))
            .ok_or_else(|| TaggerError::MissingEmissions(id.to_string()))
    }
}

/// Reads an emissions file: one JSON object per line with `id`, `emissions`
/// and `tags`.
pub fn load_emissions(path: impl AsRef<Path>) -> Result<Vec<EmissionRecord>, TaggerError> {
    let path = path.as_ref();
    let io_err = |source| TaggerError::Io {
        path: path.to_path_buf(),
        source,
    };
    let reader = BufReader::new(File::open(path).map_err(io_err)?);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let record: EmissionRecord =
            serde_json::from_str(&line).map_err(|e| TaggerError::Parse {
                path: path.to_path_buf(),
                line: idx + 1,
                message: e.to_string(),
            })?;
        out.push(record);
    }
    Ok(out)
}

/// Reads a transition model stored as JSON `{"tags", "start", "transitions"}`.
pub fn load_viterbi_model(path: impl AsRef<Path>) -> Result<ViterbiModel, TaggerError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| TaggerError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let model: ViterbiModel = serde_json::from_str(&text).map_err(|e| TaggerError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })?;
    model.validate()?;
    Ok(model)
}
