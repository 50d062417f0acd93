use crate::embeddings::{word_similarity, EmbeddingTable, WordVector};
use crate::tagger::KeywordSequence;
use crate::wboc::{LabelModel, ModelError};
use crate::Score;

/// Word-order similarity over the joint word list of two sentences.
///
/// For each joint word a sentence contributes the 1-based position of that
/// word, or of its most similar word when the similarity exceeds `tau`, or 0.
/// The result is `1 - |r1 - r2| / |r1 + r2|`.
pub fn stasis_word_order_similarity(
    s1: &KeywordSequence,
    s2: &KeywordSequence,
    table: &EmbeddingTable,
    tau: f64,
) -> Score {
    if s1.is_empty() && s2.is_empty() {
        return Score::degenerate();
    }
    let mut joint: Vec<&str> = Vec::with_capacity(s1.len() + s2.len());
    for w in s1.words().chain(s2.words()) {
        if !joint.contains(&w) {
            joint.push(w);
        }
    }
    let r1 = order_vector(&joint, s1, table, tau);
    let r2 = order_vector(&joint, s2, table, tau);
    let (mut diff, mut sum) = (0.0f64, 0.0f64);
    for (a, b) in r1.iter().zip(&r2) {
        diff += (a - b) * (a - b);
        sum += (a + b) * (a + b);
    }
    Score::new((1.0 - diff.sqrt() / sum.sqrt()).clamp(0.0, 1.0))
}

fn order_vector(
    joint: &[&str],
    sentence: &KeywordSequence,
    table: &EmbeddingTable,
    tau: f64,
) -> Vec<f64> {
    let words: Vec<(&str, WordVector<'_>)> = sentence
        .words()
        .map(|w| (w, table.lookup_normalized(w)))
        .collect();
    joint
        .iter()
        .map(|&w| {
            if let Some(pos) = words.iter().position(|&(x, _)| x == w) {
                return (pos + 1) as f64;
            }
            let v = table.lookup_normalized(w);
            let mut best: Option<(usize, f64)> = None;
            for (pos, &(x, xv)) in words.iter().enumerate() {
                let sim = word_similarity(w, v, x, xv);
                if best.is_none_or(|(_, b)| sim > b) {
                    best = Some((pos, sim));
                }
            }
            match best {
                Some((pos, sim)) if sim > tau => (pos + 1) as f64,
                _ => 0.0,
            }
        })
        .collect()
}

/// Best word-order similarity between `s1` and any tagged message of the label.
pub fn stasis_label_score(
    model: &LabelModel,
    s1: &KeywordSequence,
    table: &EmbeddingTable,
    tau: f64,
) -> Result<f64, ModelError> {
    if model.tagged.is_empty() {
        return Err(ModelError::EmptyTagged(model.label.clone()));
    }
    Ok(model
        .tagged
        .iter()
        .map(|s| stasis_word_order_similarity(s1, s, table, tau).value)
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kw(words: &[&str]) -> KeywordSequence {
        KeywordSequence::from_words(words.iter().copied())
    }

    fn empty_table() -> EmbeddingTable {
        EmbeddingTable::new(2).unwrap()
    }

    #[test]
    fn identical_is_one() {
        let s = kw(&["a", "b", "c"]);
        assert_eq!(
            stasis_word_order_similarity(&s, &s, &empty_table(), 0.7).value,
            1.0
        );
    }

    #[test]
    fn swapped_pair() {
        let v =
            stasis_word_order_similarity(&kw(&["a", "b"]), &kw(&["b", "a"]), &empty_table(), 0.7)
                .value;
        // r1 = [1, 2], r2 = [2, 1]
        let expected = 1.0 - 2f64.sqrt() / 18f64.sqrt();
        assert!((v - expected).abs() < 1e-12);
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_words() {
        // joint [a, b, c]; r1 = [1, 2, 0], r2 = [0, 0, 1]
        let v =
            stasis_word_order_similarity(&kw(&["a", "b"]), &kw(&["c"]), &empty_table(), 0.7).value;
        let diff = (1.0f64 + 4.0 + 1.0).sqrt();
        let sum = (1.0f64 + 4.0 + 1.0).sqrt();
        assert!((v - (1.0 - diff / sum)).abs() < 1e-12);
        assert_eq!(v, 0.0);
    }

    #[test]
    fn similar_word_fills_position() {
        let table =
            EmbeddingTable::from_entries(2, [("car", vec![1.0, 0.0]), ("auto", vec![0.9, 0.1])])
                .unwrap();
        // joint [car, x, auto]; r1 = [1, 2, 1], r2 = [1, 0, 1]
        let v = stasis_word_order_similarity(&kw(&["car", "x"]), &kw(&["auto"]), &table, 0.7).value;
        let diff = 4.0f64.sqrt();
        let sum = (4.0f64 + 4.0 + 4.0).sqrt();
        assert!((v - (1.0 - diff / sum)).abs() < 1e-12);
    }

    #[test]
    fn both_empty_is_degenerate() {
        assert!(stasis_word_order_similarity(&kw(&[]), &kw(&[]), &empty_table(), 0.7).degenerate);
    }
}
