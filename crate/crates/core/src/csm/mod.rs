//! Contextual sequence matching: Ratcliff/Obershelp pattern matching over
//! words, where two words match when they are identical or their embeddings
//! are close enough.

mod stasis;

pub use stasis::{stasis_label_score, stasis_word_order_similarity};

use serde::{Deserialize, Serialize};

use crate::embeddings::{word_similarity, EmbeddingTable, WordVector};
use crate::tagger::KeywordSequence;
use crate::wboc::{LabelModel, ModelError};
use crate::Score;

/// Default similarity needed for two different words to match.
pub const DEFAULT_TAU_MATCH: f64 = 0.7;

/// `s1[i..i + len]` matches `s2[j..j + len]` pair by pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchBlock {
    pub i: usize,
    pub j: usize,
    pub len: usize,
}

/// Pairwise match predicate between two keyword sequences, row-major over `s1`.
pub struct MatchGrid {
    rows: usize,
    cols: usize,
    cells: Vec<bool>,
}

impl MatchGrid {
    pub fn new(
        s1: &KeywordSequence,
        s2: &KeywordSequence,
        table: &EmbeddingTable,
        tau_match: f64,
    ) -> Self {
        let v2: Vec<(&str, WordVector<'_>)> = s2
            .words()
            .map(|w| (w, table.lookup_normalized(w)))
            .collect();
        let mut cells = Vec::with_capacity(s1.len() * s2.len());
        for w1 in s1.words() {
            let v1 = table.lookup_normalized(w1);
            cells.extend(
                v2.iter()
                    .map(|&(w2, v2)| word_similarity(w1, v1, w2, v2) >= tau_match),
            );
        }
        Self {
            rows: s1.len(),
            cols: s2.len(),
            cells,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut cells = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                cells.push(f(i, j));
            }
        }
        Self { rows, cols, cells }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn matches(&self, i: usize, j: usize) -> bool {
        self.cells[i * self.cols + j]
    }

    /// Longest block inside `[lo1, hi1) x [lo2, hi2)`; ties go to the smallest
    /// start in `s1`, then in `s2`.
    fn longest_block(&self, lo1: usize, hi1: usize, lo2: usize, hi2: usize) -> Option<MatchBlock> {
        let width = hi2 - lo2;
        let mut prev = vec![0usize; width + 1];
        let mut cur = vec![0usize; width + 1];
        let mut best: Option<MatchBlock> = None;
        for i in lo1..hi1 {
            for j in lo2..hi2 {
                let k = j - lo2 + 1;
                cur[k] = if self.matches(i, j) {
                    prev[k - 1] + 1
                } else {
                    0
                };
                let len = cur[k];
                if len == 0 {
                    continue;
                }
                let cand = MatchBlock {
                    i: i + 1 - len,
                    j: j + 1 - len,
                    len,
                };
                let better = match best {
                    None => true,
                    Some(b) => len > b.len || (len == b.len && (cand.i, cand.j) < (b.i, b.j)),
                };
                if better {
                    best = Some(cand);
                }
            }
            std::mem::swap(&mut prev, &mut cur);
        }
        best
    }

    /// Blocks chosen by the recursive longest-block rule, ordered by position.
    pub fn blocks(&self) -> Vec<MatchBlock> {
        let mut out = Vec::new();
        let mut stack = vec![(0, self.rows, 0, self.cols)];
        while let Some((lo1, hi1, lo2, hi2)) = stack.pop() {
            if lo1 >= hi1 || lo2 >= hi2 {
                continue;
            }
            if let Some(b) = self.longest_block(lo1, hi1, lo2, hi2) {
                out.push(b);
                stack.push((b.i + b.len, hi1, b.j + b.len, hi2));
                stack.push((lo1, b.i, lo2, b.j));
            }
        }
        out.sort_by_key(|b| (b.i, b.j));
        out
    }
}

pub fn matching_blocks(
    s1: &KeywordSequence,
    s2: &KeywordSequence,
    table: &EmbeddingTable,
    tau_match: f64,
) -> Vec<MatchBlock> {
    MatchGrid::new(s1, s2, table, tau_match).blocks()
}

/// Number of matched words: the longest block plus, recursively, the matches
/// in the remainders to its left and right. Each matched pair counts once.
pub fn matching_words(
    s1: &KeywordSequence,
    s2: &KeywordSequence,
    table: &EmbeddingTable,
    tau_match: f64,
) -> usize {
    matching_blocks(s1, s2, table, tau_match)
        .iter()
        .map(|b| b.len)
        .sum()
}

/// `2 * matches / (|s1| + |s2|)`.
pub fn sim_contx(
    s1: &KeywordSequence,
    s2: &KeywordSequence,
    table: &EmbeddingTable,
    tau_match: f64,
) -> Score {
    let total = s1.len() + s2.len();
    if total == 0 {
        return Score::degenerate();
    }
    let m = matching_words(s1, s2, table, tau_match);
    Score::new((2 * m) as f64 / total as f64)
}

/// Best `sim_contx` between `s1` and any tagged message of the label.
pub fn csm_label_score(
    model: &LabelModel,
    s1: &KeywordSequence,
    table: &EmbeddingTable,
    tau_match: f64,
) -> Result<f64, ModelError> {
    if model.tagged.is_empty() {
        return Err(ModelError::EmptyTagged(model.label.clone()));
    }
    Ok(model
        .tagged
        .iter()
        .map(|s| sim_contx(s1, s, table, tau_match).value)
        .fold(0.0, f64::max))
}
