//! Fixtures and independent reference implementations shared by the
//! integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use smsim_core::{EmbeddingTable, KeywordSequence};

/// A small vocabulary with known vectors: a few families of nearby words,
/// plus words left out of the table.
pub struct WordPool {
    pub table: EmbeddingTable,
    pub vectors: BTreeMap<String, Vec<f32>>,
    pub words: Vec<String>,
}

pub const POOL_DIM: usize = 8;

fn unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

impl WordPool {
    /// `families` groups of `per_family` embedded words, plus `oov` words with
    /// no vector. Within a family the noise level varies per word, so pair
    /// cosines spread across the usual thresholds.
    pub fn random(rng: &mut ChaCha8Rng, families: usize, per_family: usize, oov: usize) -> Self {
        let mut vectors = BTreeMap::new();
        let mut words = Vec::new();
        for f in 0..families {
            let base = unit(rng, POOL_DIM);
            for i in 0..per_family {
                let noise = unit(rng, POOL_DIM);
                let eps: f64 = rng.random_range(0.1..0.9);
                let v: Vec<f32> = base
                    .iter()
                    .zip(&noise)
                    .map(|(b, n)| (b + eps * n) as f32)
                    .collect();
                let w = format!("f{f}w{i}");
                vectors.insert(w.clone(), v);
                words.push(w);
            }
        }
        for i in 0..oov {
            words.push(format!("oov{i}"));
        }
        let table = EmbeddingTable::from_entries(POOL_DIM, vectors.clone()).unwrap();
        Self {
            table,
            vectors,
            words,
        }
    }

    pub fn sequence(&self, rng: &mut ChaCha8Rng, max_len: usize) -> Vec<String> {
        let n = rng.random_range(0..=max_len);
        (0..n)
            .map(|_| self.words[rng.random_range(0..self.words.len())].clone())
            .collect()
    }

    /// Match predicate computed from the raw vectors, without the library.
    pub fn matches(&self, a: &str, b: &str, tau: f64) -> bool {
        if a == b {
            return true;
        }
        match (self.vectors.get(a), self.vectors.get(b)) {
            (Some(u), Some(v)) => ref_cosine(u, v) >= tau,
            _ => false,
        }
    }
}

pub fn kw(words: &[String]) -> KeywordSequence {
    KeywordSequence::from_words(words.iter().map(String::as_str))
}

pub fn ref_cosine(u: &[f32], v: &[f32]) -> f64 {
    let dot: f64 = u
        .iter()
        .zip(v)
        .map(|(&a, &b)| f64::from(a) * f64::from(b))
        .sum();
    let nu: f64 = u
        .iter()
        .map(|&a| f64::from(a) * f64::from(a))
        .sum::<f64>()
        .sqrt();
    let nv: f64 = v
        .iter()
        .map(|&b| f64::from(b) * f64::from(b))
        .sum::<f64>()
        .sqrt();
    (dot / (nu * nv)).clamp(-1.0, 1.0)
}

/// Reference matcher: scan every start pair, extend each block as far as it
/// goes, keep the longest (earliest in `a`, then in `b`), recurse on both
/// flanks.
pub fn ref_matching_words(
    m: &dyn Fn(usize, usize) -> bool,
    lo1: usize,
    hi1: usize,
    lo2: usize,
    hi2: usize,
) -> usize {
    let mut best = (0usize, 0usize, 0usize);
    for i in lo1..hi1 {
        for j in lo2..hi2 {
            let mut len = 0;
            while i + len < hi1 && j + len < hi2 && m(i + len, j + len) {
                len += 1;
            }
            if len > best.2 {
                best = (i, j, len);
            }
        }
    }
    let (i, j, len) = best;
    if len == 0 {
        return 0;
    }
    len + ref_matching_words(m, lo1, i, lo2, j) + ref_matching_words(m, i + len, hi1, j + len, hi2)
}

/// Longest common subsequence under the same predicate; an upper bound for
/// any set of ordered, non-overlapping blocks.
pub fn ref_lcs(m: &dyn Fn(usize, usize) -> bool, n1: usize, n2: usize) -> usize {
    let mut dp = vec![vec![0usize; n2 + 1]; n1 + 1];
    for i in 1..=n1 {
        for j in 1..=n2 {
            dp[i][j] = if m(i - 1, j - 1) {
                dp[i - 1][j - 1] + 1
            } else {
                dp[i - 1][j].max(dp[i][j - 1])
            };
        }
    }
    dp[n1][n2]
}

/// Exhaustive decoder: scores every tag path and keeps the best one, ties
/// going to the path whose tags, read from the last position backwards, are
/// smallest.
pub fn ref_viterbi(em: &[Vec<f64>], start: &[f64], trans: &[Vec<f64>]) -> Vec<usize> {
    let t = em.len();
    let n = start.len();
    let mut best: Option<(f64, Vec<usize>)> = None;
    let total = n.pow(t as u32);
    for code in 0..total {
        let mut path = Vec::with_capacity(t);
        let mut c = code;
        for _ in 0..t {
            path.push(c % n);
            c /= n;
        }
        let mut score = start[path[0]] + em[0][path[0]];
        for k in 1..t {
            score += trans[path[k - 1]][path[k]] + em[k][path[k]];
        }
        let rev: Vec<usize> = path.iter().rev().copied().collect();
        let better = match &best {
            None => true,
            Some((s, p)) => {
                let prev: Vec<usize> = p.iter().rev().copied().collect();
                score > *s || (score == *s && rev < prev)
            }
        };
        if better {
            best = Some((score, path));
        }
    }
    best.map(|b| b.1).unwrap_or_default()
}

/// Best total over every choice of maximal block at every level of the
/// recursion. The greedy matcher can only reach this or less.
pub fn ref_best_matching_words(
    m: &dyn Fn(usize, usize) -> bool,
    lo1: usize,
    hi1: usize,
    lo2: usize,
    hi2: usize,
) -> usize {
    let mut best = 0;
    for i in lo1..hi1 {
        for j in lo2..hi2 {
            // Maximal: cannot be extended to the left inside the region.
            if !m(i, j) || (i > lo1 && j > lo2 && m(i - 1, j - 1)) {
                continue;
            }
            let mut len = 0;
            while i + len < hi1 && j + len < hi2 && m(i + len, j + len) {
                len += 1;
            }
            let total = len
                + ref_best_matching_words(m, lo1, i, lo2, j)
                + ref_best_matching_words(m, i + len, hi1, j + len, hi2);
            best = best.max(total);
        }
    }
    best
}
