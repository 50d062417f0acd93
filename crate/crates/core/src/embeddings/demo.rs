use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{EmbeddingError, EmbeddingTable};
use crate::corpus::{vocabulary, SemanticGroup, SEMANTIC_GROUPS};

const TOPIC_WEIGHT: f64 = 0.6;
const NOISE: f64 = 0.45;

/// Small deterministic stand-in for GloVe covering the synthetic corpus
/// vocabulary.
///
/// Words in one semantic group share a base direction (pairwise cosine around
/// 0.85); groups in one topic share a weaker topic direction; everything else
/// is close to orthogonal. Vendor names are left out so they are OOV.
pub fn demo_embedding_table(dim: usize, seed: u64) -> Result<EmbeddingTable, EmbeddingError> {
    if dim == 0 {
        return Err(EmbeddingError::InvalidDimension(dim));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gaussian = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        (0..dim).map(|_| StandardNormal.sample(rng)).collect()
    };

    let groups: &[SemanticGroup] = SEMANTIC_GROUPS;
    let mut topics: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for g in groups {
        topics.entry(g.topic).or_default();
    }
    for v in topics.values_mut() {
        *v = gaussian(&mut rng);
    }
    let bases: Vec<Vec<f64>> = groups.iter().map(|_| gaussian(&mut rng)).collect();

    let mut entries = Vec::new();
    for (word, group) in vocabulary() {
        let noise = gaussian(&mut rng);
        let vector: Vec<f32> = match group {
            Some(gi) => {
                let topic = &topics[groups[gi].topic];
                (0..dim)
                    .map(|d| (TOPIC_WEIGHT * topic[d] + bases[gi][d] + NOISE * noise[d]) as f32)
                    .collect()
            }
            None => noise.iter().map(|&x| x as f32).collect(),
        };
        entries.push((word, vector));
    }
    EmbeddingTable::from_entries(dim, entries)
}
