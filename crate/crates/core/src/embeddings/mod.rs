//! GloVe-format word vectors and the null-aware word similarity used by
//! both the cluster scorer and the sequence matcher.

mod demo;

pub use demo::demo_embedding_table;

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

/// Default dimension for the pipeline's word vectors.
pub const DEFAULT_DIM: usize = 50;

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("embedding file is empty")]
    Empty,
    #[error("line {line}: expected {expected} components, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: cannot parse component {value:?}")]
    BadNumber { line: usize, value: String },
    #[error("line {line}: entry has no components")]
    NoComponents { line: usize },
    #[error("vectors have different dimensions ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("zero-norm vector")]
    ZeroNorm,
    #[error("invalid dimension {0}")]
    InvalidDimension(usize),
}

/// A word's embedding, or the null marker for out-of-vocabulary words.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WordVector<'a, T = f32> {
    Dense(&'a [T]),
    Null,
}

impl<'a, T> WordVector<'a, T> {
    pub fn is_null(&self) -> bool {
        matches!(self, WordVector::Null)
    }

    pub fn as_slice(&self) -> Option<&'a [T]> {
        match *self {
            WordVector::Dense(v) => Some(v),
            WordVector::Null => None,
        }
    }
}

/// Immutable word to vector store. Keys are lowercased on insert and on lookup.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    index: HashMap<String, usize>,
    words: Vec<String>,
    data: Vec<f32>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Result<Self, EmbeddingError> {
        if dim == 0 {
            return Err(EmbeddingError::InvalidDimension(dim));
        }
        Ok(Self {
            dim,
            index: HashMap::new(),
            words: Vec::new(),
            data: Vec::new(),
        })
    }

    /// Builds a table from `(word, vector)` pairs. Later duplicates replace
    /// earlier ones.
    pub fn from_entries<I, S>(dim: usize, entries: I) -> Result<Self, EmbeddingError>
    where
        I: IntoIterator<Item = (S, Vec<f32>)>,
        S: AsRef<str>,
    {
        let mut table = Self::new(dim)?;
        for (word, vector) in entries {
            table.insert(word.as_ref(), &vector)?;
        }
        Ok(table)
    }

    fn insert(&mut self, word: &str, vector: &[f32]) -> Result<(), EmbeddingError> {
        if vector.len() != self.dim {
            return Err(EmbeddingError::LengthMismatch(self.dim, vector.len()));
        }
        let key = normalize(word);
        match self.index.get(&key) {
            Some(&slot) => {
                self.data[slot * self.dim..(slot + 1) * self.dim].copy_from_slice(vector);
            }
            None => {
                self.index.insert(key.clone(), self.words.len());
                self.words.push(key);
                self.data.extend_from_slice(vector);
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Looks up `word` after lowercasing it. Missing words map to `Null`.
    pub fn lookup(&self, word: &str) -> WordVector<'_> {
        self.lookup_normalized(&normalize(word))
    }

    /// Looks up a word that is already lowercase.
    pub fn lookup_normalized(&self, word: &str) -> WordVector<'_> {
        match self.index.get(word) {
            Some(&slot) => WordVector::Dense(&self.data[slot * self.dim..(slot + 1) * self.dim]),
            None => WordVector::Null,
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(&normalize(word))
    }

    /// Words in insertion (file) order.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.words.iter().map(String::as_str)
    }

    /// Rough resident size of the table in bytes.
    pub fn memory_bytes(&self) -> usize {
        let vectors = self.data.len() * std::mem::size_of::<f32>();
        let keys: usize = self.words.iter().map(|w| 2 * w.len()).sum();
        let slots = self.words.len()
            * (2 * std::mem::size_of::<String>() + 2 * std::mem::size_of::<usize>());
        vectors + keys + slots
    }

    /// Writes the table in GloVe text format, in insertion order.
    pub fn write_glove<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (slot, word) in self.words.iter().enumerate() {
            write!(out, "{word}")?;
            for x in &self.data[slot * self.dim..(slot + 1) * self.dim] {
                write!(out, " {x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Lowercases a token for lookup and exact matching.
pub fn normalize(word: &str) -> String {
    word.to_lowercase()
}

/// Loads a GloVe text file. The dimension is taken from the first line unless
/// `expected_dim` is given, in which case the first mismatching line fails.
pub fn load_embedding_table(
    path: impl AsRef<Path>,
    expected_dim: Option<usize>,
) -> Result<EmbeddingTable, EmbeddingError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| EmbeddingError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_embedding_table(BufReader::new(file), expected_dim).map_err(|e| match e {
        EmbeddingError::Io { source, .. } => EmbeddingError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

pub fn read_embedding_table<R: BufRead>(
    reader: R,
    expected_dim: Option<usize>,
) -> Result<EmbeddingTable, EmbeddingError> {
    let mut table: Option<EmbeddingTable> = None;
    let mut buf = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| EmbeddingError::Io {
            path: PathBuf::new(),
            source,
        })?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split(' ');
        let word = parts.next().unwrap_or_default();
        buf.clear();
        for value in parts {
            let x: f32 = value.parse().map_err(|_| EmbeddingError::BadNumber {
                line: line_no,
                value: value.to_string(),
            })?;
            buf.push(x);
        }
        if buf.is_empty() {
            return Err(EmbeddingError::NoComponents { line: line_no });
        }
        let table = match table.as_mut() {
            Some(t) => t,
            None => {
                let dim = expected_dim.unwrap_or(buf.len());
                table.insert(EmbeddingTable::new(dim)?)
            }
        };
        if buf.len() != table.dim {
            return Err(EmbeddingError::DimensionMismatch {
                line: line_no,
                expected: table.dim,
                found: buf.len(),
            });
        }
        table.insert(word, &buf)?;
    }
    table.ok_or(EmbeddingError::Empty)
}

/// Cosine of the angle between `u` and `v`, clamped into `[-1, 1]`.
pub fn cosine<A, B>(u: &[A], v: &[B]) -> Result<f64, EmbeddingError>
where
    A: Copy + Into<f64>,
    B: Copy + Into<f64>,
{
    if u.len() != v.len() {
        return Err(EmbeddingError::LengthMismatch(u.len(), v.len()));
    }
    let mut dot = 0.0f64;
    let mut nu = 0.0f64;
    let mut nv = 0.0f64;
    for (&a, &b) in u.iter().zip(v) {
        let (a, b): (f64, f64) = (a.into(), b.into());
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Err(EmbeddingError::ZeroNorm);
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

/// Similarity between two words that may lack embeddings.
///
/// Both embedded: cosine of the vectors. Otherwise the normalized strings are
/// compared exactly and the result is 1 or 0. Identical words always score 1.
pub fn word_similarity<A, B>(
    w1: &str,
    v1: WordVector<'_, A>,
    w2: &str,
    v2: WordVector<'_, B>,
) -> f64
where
    A: Copy + Into<f64>,
    B: Copy + Into<f64>,
{
    if same_word(w1, w2) {
        return 1.0;
    }
    match (v1, v2) {
        (WordVector::Dense(a), WordVector::Dense(b)) => cosine(a, b).unwrap_or(0.0),
        _ => 0.0,
    }
}

/// Case-insensitive string equality without allocating on ASCII input.
pub fn same_word(a: &str, b: &str) -> bool {
    if a.is_ascii() && b.is_ascii() {
        a.eq_ignore_ascii_case(b)
    } else {
        a.to_lowercase() == b.to_lowercase()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn loads_three_entries() {
        let text = "a 1 0 0 0\nb 0 1 0 0\nc 0 0 1 0.5\n";
        let table = read_embedding_table(text.as_bytes(), None).unwrap();
        assert_eq!(table.len(), 3);
        assert_eq!(table.dim(), 4);
        assert_eq!(table.lookup("C").as_slice().unwrap(), &[0.0, 0.0, 1.0, 0.5]);
    }

    #[test]
    fn mixed_dimensions_fail_with_line() {
        let text = "a 1 0 0 0\nb 0 1 0 0 1\n";
        match read_embedding_table(text.as_bytes(), None) {
            Err(EmbeddingError::DimensionMismatch {
                line,
                expected,
                found,
            }) => {
                assert_eq!((line, expected, found), (2, 4, 5));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn expected_dim_rejected_on_first_line() {
        let line: String = std::iter::once("w".to_string())
            .chain((0..100).map(|i| format!("{}", i as f32 / 100.0)))
            .collect::<Vec<_>>()
            .join(" ");
        let text = format!("{line}\n{line}\n");
        match read_embedding_table(text.as_bytes(), Some(50)) {
            Err(EmbeddingError::DimensionMismatch {
                line: 1,
                expected: 50,
                found: 100,
            }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_and_bad_number() {
        assert!(matches!(
            read_embedding_table("".as_bytes(), None),
            Err(EmbeddingError::Empty)
        ));
        assert!(matches!(
            read_embedding_table("a 1 x\n".as_bytes(), None),
            Err(EmbeddingError::BadNumber { line: 1, .. })
        ));
    }

    #[test]
    fn missing_word_is_null() {
        let table = EmbeddingTable::from_entries(2, [("offer", vec![1.0, 0.0])]).unwrap();
        assert!(table.lookup("zingpay").is_null());
        assert!(!table.lookup("OFFER").is_null());
    }

    #[test]
    fn cosine_examples() {
        assert_abs_diff_eq!(cosine(&[1.0f64, 0.0], &[1.0f64, 0.0]).unwrap(), 1.0);
        assert_abs_diff_eq!(cosine(&[1.0f64, 0.0], &[0.0f64, 1.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(
            cosine(&[1.0f64, 1.0], &[1.0f64, 0.0]).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-5
        );
        assert!(matches!(
            cosine(&[1.0f64], &[1.0f64, 0.0]),
            Err(EmbeddingError::LengthMismatch(1, 2))
        ));
        assert!(matches!(
            cosine(&[0.0f64, 0.0], &[1.0f64, 0.0]),
            Err(EmbeddingError::ZeroNorm)
        ));
    }

    #[test]
    fn null_aware_similarity() {
        let offer = [0.3f32, 0.4];
        let null = WordVector::<f32>::Null;
        assert_eq!(word_similarity("zingpay", null, "ZingPay", null), 1.0);
        assert_eq!(
            word_similarity("zingpay", null, "offer", WordVector::Dense(&offer)),
            0.0
        );
        let deal = [0.4f32, 0.3];
        let sim = word_similarity(
            "offer",
            WordVector::Dense(&offer),
            "deal",
            WordVector::Dense(&deal),
        );
        assert_abs_diff_eq!(sim, cosine(&offer, &deal).unwrap());
    }

    fn vec_strategy(dim: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, dim)
    }

    proptest! {
        #[test]
        fn cosine_scale_invariant(u in vec_strategy(8), k in 0.01f64..100.0) {
            prop_assume!(u.iter().any(|x| x.abs() > 1e-3));
            let scaled: Vec<f64> = u.iter().map(|x| k * x).collect();
            prop_assert!((cosine(&u, &scaled).unwrap() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn similarity_symmetric_and_bounded(
            u in vec_strategy(4),
            v in vec_strategy(4),
            a in "[a-c]{1,2}",
            b in "[a-c]{1,2}",
            null_u in any::<bool>(),
            null_v in any::<bool>(),
        ) {
            let wu = if null_u { WordVector::Null } else { WordVector::Dense(&u[..]) };
            let wv = if null_v { WordVector::Null } else { WordVector::Dense(&v[..]) };
            let s1 = word_similarity(&a, wu, &b, wv);
            let s2 = word_similarity(&b, wv, &a, wu);
            prop_assert_eq!(s1, s2);
            prop_assert!((-1.0..=1.0).contains(&s1));
            prop_assert_eq!(word_similarity(&a, wu, &a, wu), 1.0);
        }
    }
}
