mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{kw, WordPool};
use smsim_core::corpus::{compute_kappa, generate_synthetic_corpus, AnnotationSet};
use smsim_core::csm::{csm_label_score, matching_words, sim_contx};
use smsim_core::embeddings::demo_embedding_table;
use smsim_core::eval::{partition_kfold, ConfusionTally};
use smsim_core::pipeline::{confidence, ModelStore, PipelineConfig};
use smsim_core::wboc::build_label_model;
use smsim_core::{KeywordSequence, Tagger};

fn pool(seed: u64) -> WordPool {
    WordPool::random(&mut ChaCha8Rng::seed_from_u64(seed), 3, 3, 3)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn confidence_is_linear_in_alpha(w in 0.0..=1.0f64, c in 0.0..=1.0f64, a in 0.01..=1.0f64) {
        let got = confidence(w, c, a).unwrap();
        prop_assert!((got - (c + a * (w - c))).abs() < 1e-12);
        let hi = confidence((w + 0.1).min(1.0), c, a).unwrap();
        prop_assert!(hi >= got);
    }

    #[test]
    fn matched_words_bounded(seed in 0u64..50, sa in any::<u64>(), tau in 0.3..=1.0f64) {
        let p = pool(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(sa);
        let a = kw(&p.sequence(&mut rng, 6));
        let b = kw(&p.sequence(&mut rng, 6));
        let m = matching_words(&a, &b, &p.table, tau);
        prop_assert!(m <= a.len().min(b.len()));
        let s = sim_contx(&a, &b, &p.table, tau);
        prop_assert!((0.0..=1.0).contains(&s.value));
    }

    #[test]
    fn label_score_grows_with_tagged_set(seed in 0u64..50, sa in any::<u64>()) {
        let p = pool(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(sa);
        let mut tagged: Vec<KeywordSequence> = Vec::new();
        let probe = kw(&p.sequence(&mut rng, 6));
        let mut last = 0.0;
        for _ in 0..4 {
            let mut words = p.sequence(&mut rng, 6);
            words.push(p.words[0].clone());
            tagged.push(kw(&words));
            let model = build_label_model("L", &tagged, &p.table, 0.7).unwrap();
            let s = csm_label_score(&model, &probe, &p.table, 0.7).unwrap();
            prop_assert!(s >= last);
            last = s;
        }
    }

    #[test]
    fn kappa_is_symmetric(labels in proptest::collection::vec((0u8..3, 0u8..3), 1..40)) {
        let mut a = AnnotationSet::new("a");
        let mut b = AnnotationSet::new("b");
        for (i, (x, y)) in labels.iter().enumerate() {
            a.assign(format!("m{i}"), format!("l{x}")).unwrap();
            b.assign(format!("m{i}"), format!("l{y}")).unwrap();
        }
        let set: BTreeSet<String> = (0..3).map(|i| format!("l{i}")).collect();
        let ab = compute_kappa(&a, &b, &set).unwrap();
        let ba = compute_kappa(&b, &a, &set).unwrap();
        prop_assert_eq!(&ab, &ba);
        prop_assert!(ab.omega.is_none_or(|o| o <= 1.0));
    }

    #[test]
    fn tally_rows_sum_to_counts(rows in proptest::collection::vec((0u8..3, proptest::option::of(0u8..3)), 1..60)) {
        let mut t = ConfusionTally::new(["l0", "l1", "l2"]);
        for (truth, pred) in &rows {
            let p = pred.map(|p| format!("l{p}"));
            t.add(&format!("l{truth}"), p.as_deref());
        }
        let sum: usize = (0..3).map(|i| t.row_total(&format!("l{i}"))).sum();
        prop_assert_eq!(sum, rows.len());
        let m = t.metrics();
        for v in [m.precision, m.recall, m.f1, m.accuracy] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        if m.precision * m.recall == 0.0 {
            prop_assert_eq!(m.f1, 0.0);
        }
    }
}

#[test]
fn self_retrieval_on_synthetic_labels() {
    let labels: BTreeSet<String> = ["Bills", "Courier Updates", "Flight Travel"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let corpus = generate_synthetic_corpus(&labels, 8, 3).unwrap();
    let tagger = Tagger::default();
    let table = Arc::new(demo_embedding_table(50, 42).unwrap());
    let mut store = ModelStore::new(PipelineConfig::default(), table).unwrap();
    for m in corpus.messages() {
        store
            .assign(m, m.label.as_deref().unwrap(), &tagger)
            .unwrap();
    }
    for m in corpus.messages() {
        let r = store.predict(m, &tagger).unwrap();
        assert_eq!(r.chosen.as_deref(), m.label.as_deref(), "{}", m.text);
        assert!((r.confidence.unwrap() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn fold_groups_cover_each_label_once() {
    let labels: BTreeSet<String> = ["A", "B", "C"].iter().map(|s| s.to_string()).collect();
    let corpus = generate_synthetic_corpus(&labels, 13, 1).unwrap();
    let plan = partition_kfold(&corpus, 4, 7).unwrap();
    let mut seen = vec![0; corpus.len()];
    for g in &plan.groups {
        for &i in g {
            seen[i] += 1;
        }
    }
    assert!(seen.iter().all(|&n| n == 1));
    for idx in corpus.indices_by_label().values() {
        let sizes: Vec<usize> = plan
            .groups
            .iter()
            .map(|g| g.iter().filter(|i| idx.contains(i)).count())
            .collect();
        let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
        assert!(hi - lo <= 1, "{sizes:?}");
    }
}

#[test]
fn store_round_trips_through_disk() {
    let tagger = Tagger::default();
    let table = Arc::new(demo_embedding_table(50, 42).unwrap());
    let mut store = ModelStore::new(PipelineConfig::default(), table.clone()).unwrap();
    store
        .assign_text("Login OTP", "Your OTP is 4321", &tagger)
        .unwrap();
    store
        .assign_text("Food Offer", "Flat 50% off on pizza from Swigo", &tagger)
        .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("store.json");
    store.save(&path).unwrap();
    let back = ModelStore::load(&path, table).unwrap();
    assert_eq!(back.to_json(), store.to_json());
    let r1 = store
        .predict_text("Pizza offer from Swigo", &tagger)
        .unwrap();
    let r2 = back
        .predict_text("Pizza offer from Swigo", &tagger)
        .unwrap();
    assert_eq!(r1, r2);
}
