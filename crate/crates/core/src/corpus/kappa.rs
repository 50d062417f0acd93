use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{AnnotationSet, CorpusError};

/// Agreement between two annotators over the same messages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaReport {
    /// Co-annotated messages.
    pub n: usize,
    /// Messages on which both annotators chose the same label.
    pub agreements: usize,
    pub p_a: f64,
    pub p_e: f64,
    /// `None` when chance agreement is 1 and kappa is undefined.
    pub omega: Option<f64>,
}

/// Chance-corrected agreement from observed and chance agreement rates.
pub fn kappa_from_rates(p_a: f64, p_e: f64) -> Option<f64> {
    if p_e >= 1.0 {
        None
    } else {
        Some((p_a - p_e) / (1.0 - p_e))
    }
}

/// Kappa for two annotators.
///
/// Chance agreement pools both annotators: with `c_j` the number of times
/// either annotator used label `j`, `p_e = sum_j ((c_j / 2) / n)^2`.
pub fn compute_kappa(
    a1: &AnnotationSet,
    a2: &AnnotationSet,
    labels: &BTreeSet<String>,
) -> Result<KappaReport, CorpusError> {
    if a1.assignments.len() != a2.assignments.len()
        || a1
            .assignments
            .keys()
            .any(|id| !a2.assignments.contains_key(id))
    {
        return Err(CorpusError::CoverageMismatch);
    }
    let n = a1.assignments.len();
    if n == 0 {
        return Err(CorpusError::NoSamples);
    }

    let mut pooled: BTreeMap<&str, usize> = BTreeMap::new();
    let mut agreements = 0;
    for (id, l1) in &a1.assignments {
        let l2 = &a2.assignments[id];
        for l in [l1, l2] {
            if !labels.contains(l) {
                return Err(CorpusError::UnknownLabel(l.clone()));
            }
            *pooled.entry(l.as_str()).or_default() += 1;
        }
        if l1 == l2 {
            agreements += 1;
        }
    }

    let nf = n as f64;
    let p_a = agreements as f64 / nf;
    let p_e: f64 = pooled
        .values()
        .map(|&c| {
            let share = (c as f64 / 2.0) / nf;
            share * share
        })
        .sum();
    Ok(KappaReport {
        n,
        agreements,
        p_a,
        p_e,
        omega: kappa_from_rates(p_a, p_e),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn set(name: &str, labels: &[&str]) -> AnnotationSet {
        let mut s = AnnotationSet::new(name);
        for (i, l) in labels.iter().enumerate() {
            s.assign(format!("m{i}"), *l).unwrap();
        }
        s
    }

    fn label_set(names: &[&str]) -> BTreeSet<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn perfect_agreement() {
        let a = set("a", &["x", "y", "x"]);
        let r = compute_kappa(&a, &a, &label_set(&["x", "y"])).unwrap();
        assert_eq!(r.p_a, 1.0);
        assert_eq!(r.omega, Some(1.0));
    }

    #[test]
    fn hand_computed_four_samples() {
        let a = set("a", &["x", "x", "y", "y"]);
        let b = set("b", &["x", "y", "y", "y"]);
        let r = compute_kappa(&a, &b, &label_set(&["x", "y"])).unwrap();
        assert_eq!(r.agreements, 3);
        assert_eq!(r.p_a, 0.75);
        // c_x = 3, c_y = 5: (1.5/4)^2 + (2.5/4)^2
        assert!((r.p_e - 0.53125).abs() < 1e-12);
        assert!((r.omega.unwrap() - (0.75 - 0.53125) / (1.0 - 0.53125)).abs() < 1e-12);
        assert!((r.omega.unwrap() - 0.4667).abs() < 1e-4);
    }

    #[test]
    fn reported_rates() {
        let omega = kappa_from_rates(0.823, 0.244).unwrap();
        assert!((omega - 0.766).abs() < 0.002, "{omega}");
    }

    #[test]
    fn symmetric() {
        let a = set("a", &["x", "z", "y", "y", "x"]);
        let b = set("b", &["x", "y", "y", "z", "z"]);
        let labels = label_set(&["x", "y", "z"]);
        assert_eq!(
            compute_kappa(&a, &b, &labels).unwrap(),
            compute_kappa(&b, &a, &labels).unwrap()
        );
    }

    #[test]
    fn degenerate_and_errors() {
        let a = set("a", &["x", "x"]);
        let r = compute_kappa(&a, &a, &label_set(&["x"])).unwrap();
        assert_eq!(r.p_e, 1.0);
        assert_eq!(r.omega, None);

        let short = set("b", &["x"]);
        assert!(matches!(
            compute_kappa(&a, &short, &label_set(&["x"])),
            Err(CorpusError::CoverageMismatch)
        ));
        let empty = AnnotationSet::new("e");
        assert!(matches!(
            compute_kappa(&empty, &empty, &label_set(&["x"])),
            Err(CorpusError::NoSamples)
        ));
        assert!(matches!(
            compute_kappa(&a, &a, &label_set(&["y"])),
            Err(CorpusError::UnknownLabel(_))
        ));
    }

    #[test]
    fn random_annotators_near_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let names = ["a", "b", "c", "d"];
        let mut a = AnnotationSet::new("a");
        let mut b = AnnotationSet::new("b");
        for i in 0..10_000 {
            a.assign(i.to_string(), names[rng.random_range(0..4)])
                .unwrap();
            b.assign(i.to_string(), names[rng.random_range(0..4)])
                .unwrap();
        }
        let r = compute_kappa(&a, &b, &label_set(&names)).unwrap();
        assert!(r.omega.unwrap().abs() < 0.1, "{r:?}");
    }
}
