use serde::{Deserialize, Serialize};

use super::{Tag, TaggerError};

/// Linear-chain scores for Viterbi decoding. Emissions are supplied per call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViterbiModel {
    pub tags: Vec<Tag>,
    pub start: Vec<f64>,
    pub transitions: Vec<Vec<f64>>,
}

impl ViterbiModel {
    pub fn new(
        tags: Vec<Tag>,
        start: Vec<f64>,
        transitions: Vec<Vec<f64>>,
    ) -> Result<Self, TaggerError> {
        let model = Self {
            tags,
            start,
            transitions,
        };
        model.validate()?;
        Ok(model)
    }

    /// A model with all start and transition scores zero, which reduces
    /// decoding to a per-token argmax over emissions.
    pub fn uniform(tags: Vec<Tag>) -> Self {
        let t = tags.len();
        Self {
            tags,
            start: vec![0.0; t],
            transitions: vec![vec![0.0; t]; t],
        }
    }

    pub fn num_tags(&self) -> usize {
        self.start.len()
    }

    pub fn validate(&self) -> Result<(), TaggerError> {
        let t = self.start.len();
        if t == 0 {
            return Err(TaggerError::InvalidModel("tag set is empty".into()));
        }
        if !self.tags.is_empty() && self.tags.len() != t {
            return Err(TaggerError::InvalidModel(format!(
                "{} tags but {} start scores",
                self.tags.len(),
                t
            )));
        }
        if self.transitions.len() != t || self.transitions.iter().any(|row| row.len() != t) {
            return Err(TaggerError::InvalidModel(format!(
                "transition matrix is not {t}x{t}"
            )));
        }
        let finite = self
            .start
            .iter()
            .chain(self.transitions.iter().flatten())
            .all(|x| x.is_finite());
        if !finite {
            return Err(TaggerError::InvalidModel("non-finite score".into()));
        }
        Ok(())
    }

    /// Score of a tag path under this model and the given emissions.
    pub fn path_score(&self, emissions: &[Vec<f64>], path: &[usize]) -> f64 {
        let mut score = self.start[path[0]] + emissions[0][path[0]];
        for i in 1..path.len() {
            score += self.transitions[path[i - 1]][path[i]] + emissions[i][path[i]];
        }
        score
    }
}

/// Highest-scoring tag path for an `N x T` emission matrix.
///
/// Among equal-scoring candidates the smallest tag index wins, both for the
/// final tag and for every backpointer.
pub fn viterbi_decode(
    emissions: &[Vec<f64>],
    model: &ViterbiModel,
) -> Result<Vec<usize>, TaggerError> {
    let t = model.num_tags();
    if emissions.is_empty() {
        return Err(TaggerError::EmptyEmissions);
    }
    if let Some((row, r)) = emissions.iter().enumerate().find(|(_, r)| r.len() != t) {
        return Err(TaggerError::EmissionWidth {
            row,
            expected: t,
            found: r.len(),
        });
    }

    let n = emissions.len();
    let mut score: Vec<f64> = (0..t).map(|j| model.start[j] + emissions[0][j]).collect();
    let mut next = vec![0.0; t];
    let mut back = vec![0usize; n * t];

    for i in 1..n {
        for j in 0..t {
            let mut best = 0;
            let mut best_score = score[0] + model.transitions[0][j];
            for (k, (&sk, row)) in score.iter().zip(&model.transitions).enumerate().skip(1) {
                let s = sk + row[j];
                if s > best_score {
                    best = k;
                    best_score = s;
                }
            }
            back[i * t + j] = best;
            next[j] = best_score + emissions[i][j];
        }
        std::mem::swap(&mut score, &mut next);
    }

    let mut last = 0;
    for j in 1..t {
        if score[j] > score[last] {
            last = j;
        }
    }
    let mut path = vec![0; n];
    path[n - 1] = last;
    for i in (1..n).rev() {
        path[i - 1] = back[i * t + path[i]];
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(start: Vec<f64>, transitions: Vec<Vec<f64>>) -> ViterbiModel {
        ViterbiModel::new(vec![], start, transitions).unwrap()
    }

    #[test]
    fn single_step_argmax() {
        let m = model(vec![0.0, 0.0], vec![vec![0.0; 2]; 2]);
        assert_eq!(viterbi_decode(&[vec![0.2, 0.9]], &m).unwrap(), vec![1]);
    }

    #[test]
    fn transition_beats_emission() {
        let m = model(vec![0.0, 0.0], vec![vec![2.0, 0.0], vec![0.0, 0.0]]);
        let em = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        let path = viterbi_decode(&em, &m).unwrap();
        assert_eq!(path, vec![0, 0]);
        assert_eq!(m.path_score(&em, &path), 3.0);
        assert_eq!(m.path_score(&em, &[0, 1]), 2.0);
        assert_eq!(m.path_score(&em, &[1, 0]), 0.0);
        assert_eq!(m.path_score(&em, &[1, 1]), 1.0);
    }

    #[test]
    fn all_zero_picks_first_tag() {
        let m = ViterbiModel::uniform(vec![Tag::Noun, Tag::Verb, Tag::Adj]);
        let em = vec![vec![0.0; 3]; 5];
        assert_eq!(viterbi_decode(&em, &m).unwrap(), vec![0; 5]);
    }

    #[test]
    fn rejects_bad_shapes() {
        let m = ViterbiModel::uniform(vec![Tag::Noun, Tag::Verb]);
        assert!(matches!(
            viterbi_decode(&[], &m),
            Err(TaggerError::EmptyEmissions)
        ));
        assert!(matches!(
            viterbi_decode(&[vec![0.0, 1.0], vec![1.0]], &m),
            Err(TaggerError::EmissionWidth {
                row: 1,
                expected: 2,
                found: 1
            })
        ));
        assert!(ViterbiModel::new(vec![], vec![0.0], vec![vec![f64::NAN]]).is_err());
        assert!(ViterbiModel::new(vec![], vec![], vec![]).is_err());
    }
}
