use std::collections::HashMap;
use std::path::Path;

use super::{Tag, TaggerError, Token};

const DEFAULT_LEXICON: &str = include_str!("default_lexicon.tsv");

/// Deterministic tagger: lexicon lookup, then numeric and capitalization
/// heuristics, then suffix rules, then NOUN.
#[derive(Debug, Clone)]
pub struct LexiconTagger {
    entries: HashMap<String, Tag>,
}

impl Default for LexiconTagger {
    fn default() -> Self {
        Self::parse(DEFAULT_LEXICON, Path::new("<builtin>"))
            .expect("builtin lexicon is well formed")
    }
}

impl LexiconTagger {
    pub fn from_entries<I, S>(entries: I) -> Self
    where
        I: IntoIterator<Item = (S, Tag)>,
        S: AsRef<str>,
    {
        Self {
            entries: entries
                .into_iter()
                .map(|(w, t)| (w.as_ref().to_lowercase(), t))
                .collect(),
        }
    }

    /// Parses `word<TAB>TAG` lines. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str, origin: &Path) -> Result<Self, TaggerError> {
        let mut entries = HashMap::new();
        for (idx, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| TaggerError::Parse {
                path: origin.to_path_buf(),
                line: idx + 1,
                message,
            };
            let (word, tag) = line
                .split_once('\t')
                .ok_or_else(|| parse_err("expected word<TAB>TAG".into()))?;
            let tag: Tag = tag
                .parse()
                .map_err(|e: TaggerError| parse_err(e.to_string()))?;
            entries.insert(word.to_lowercase(), tag);
        }
        Ok(Self { entries })
    }

    /// Adds or replaces entries, keeping the rest of the lexicon.
    pub fn extend(&mut self, other: LexiconTagger) {
        self.entries.extend(other.entries);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, word: &str) -> Option<Tag> {
        self.entries.get(&word.to_lowercase()).copied()
    }

    pub fn tag(&self, tokens: &[Token]) -> Vec<Token> {
        tokens
            .iter()
            .enumerate()
            .map(|(pos, tok)| tok.clone().with_tag(self.tag_one(tok, pos)))
            .collect()
    }

    fn tag_one(&self, tok: &Token, position: usize) -> Tag {
        if let Some(&tag) = self.entries.get(&tok.normalized) {
            return tag;
        }
        let first = tok.surface.chars().next().unwrap_or_default();
        if first.is_ascii_digit() {
            return Tag::Num;
        }
        if position > 0 && first.is_uppercase() {
            return Tag::Propn;
        }
        suffix_tag(&tok.normalized).unwrap_or(Tag::Noun)
    }
}

fn suffix_tag(word: &str) -> Option<Tag> {
    const RULES: &[(&str, Tag)] = &[
        ("ing", Tag::Verb),
        ("ed", Tag::Verb),
        ("ly", Tag::Adv),
        ("ous", Tag::Adj),
        ("ful", Tag::Adj),
        ("able", Tag::Adj),
        ("ible", Tag::Adj),
        ("ive", Tag::Adj),
        ("est", Tag::Adj),
    ];
    // Short words like "bed" or "red" are too ambiguous for suffix rules.
    if word.chars().count() < 5 {
        return None;
    }
    RULES
        .iter()
        .find(|(suffix, _)| word.ends_with(suffix))
        .map(|&(_, tag)| tag)
}

pub fn load_lexicon(path: impl AsRef<Path>) -> Result<LexiconTagger, TaggerError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| TaggerError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    LexiconTagger::parse(&text, path)
}
