//! Inverted k-fold evaluation: each fold trains on one small group and tests
//! on everything else.

mod bench;
mod report;

pub use bench::{benchmark, BenchReport, StageTiming};
pub use report::{render_comparison_table, render_report, render_sweep_table};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::LabeledCorpus;
use crate::embeddings::EmbeddingTable;
use crate::pipeline::{mix, pick_label, ModelStore, PipelineConfig, PipelineError, SequenceScorer};
use crate::tagger::{KeywordSequence, Tagger, TaggerError};
use crate::wboc::WbocDenominator;

pub const DEFAULT_K: usize = 60;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("k must be at least 2, got {0}")]
    KTooSmall(usize),
    #[error("k = {k} exceeds the {count} messages of label {label:?}")]
    KTooLarge {
        k: usize,
        label: String,
        count: usize,
    },
    #[error("corpus has no labeled messages")]
    NoLabeledMessages,
    #[error("fold plan does not match corpus: {0}")]
    PlanMismatch(String),
    #[error("alpha list is empty")]
    EmptyAlphas,
    #[error("no messages to benchmark")]
    NoMessages,
    #[error("repetitions must be at least 1")]
    ZeroRepetitions,
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Tagger(#[from] TaggerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Cluster score mixed with contextual sequence matching.
    Full,
    /// Cluster score alone (alpha forced to 1).
    Baseline,
    /// Contextual matching replaced by word-order similarity.
    Stasis,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::Baseline => "baseline",
            Variant::Stasis => "stasis",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "full" => Ok(Variant::Full),
            "baseline" => Ok(Variant::Baseline),
            "stasis" => Ok(Variant::Stasis),
            other => Err(format!(
                "unknown variant {other:?} (expected full, baseline or stasis)"
            )),
        }
    }
}

/// `groups[g]` holds the corpus indices of group `g`, ascending. Every label
/// is spread over all groups with sizes differing by at most one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub groups: Vec<Vec<usize>>,
}

impl FoldPlan {
    /// Indices tested in fold `f`, ascending.
    pub fn test_indices(&self, f: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .groups
            .iter()
            .enumerate()
            .filter(|&(g, _)| g != f)
            .flat_map(|(_, idx)| idx.iter().copied())
            .collect();
        out.sort_unstable();
        out
    }

    fn check(&self, corpus: &LabeledCorpus) -> Result<(), EvalError> {
        if self.groups.len() != self.k || self.k < 2 {
            return Err(EvalError::PlanMismatch(format!(
                "{} groups for k = {}",
                self.groups.len(),
                self.k
            )));
        }
        let mut seen = vec![false; corpus.len()];
        for &i in self.groups.iter().flatten() {
            let m = corpus
                .messages()
                .get(i)
                .ok_or_else(|| EvalError::PlanMismatch(format!("index {i} is out of range")))?;
            if m.label.is_none() {
                return Err(EvalError::PlanMismatch(format!(
                    "message {} has no label",
                    m.id
                )));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(EvalError::PlanMismatch(format!("index {i} appears twice")));
            }
        }
        let labeled = corpus
            .messages()
            .iter()
            .filter(|m| m.label.is_some())
            .count();
        let covered = seen.iter().filter(|&&s| s).count();
        if covered != labeled {
            return Err(EvalError::PlanMismatch(format!(
                "{covered} of {labeled} labeled messages covered"
            )));
        }
        Ok(())
    }
}

/// Shuffles each label's messages with `seed` and deals them round-robin into
/// `k` groups. Unlabeled messages are left out.
pub fn partition_kfold(corpus: &LabeledCorpus, k: usize, seed: u64) -> Result<FoldPlan, EvalError> {
    if k < 2 {
        return Err(EvalError::KTooSmall(k));
    }
    let by_label = corpus.indices_by_label();
    if by_label.is_empty() {
        return Err(EvalError::NoLabeledMessages);
    }
    if let Some((label, idx)) = by_label.iter().find(|(_, idx)| idx.len() < k) {
        return Err(EvalError::KTooLarge {
            k,
            label: label.to_string(),
            count: idx.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut groups = vec![Vec::new(); k];
    for mut idx in by_label.into_values() {
        idx.shuffle(&mut rng);
        for (pos, i) in idx.into_iter().enumerate() {
            groups[pos % k].push(i);
        }
    }
    for g in &mut groups {
        g.sort_unstable();
    }
    Ok(FoldPlan { k, seed, groups })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    /// Macro average over labels.
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub total: usize,
    pub rejected: usize,
    pub per_label: BTreeMap<String, LabelMetrics>,
}

/// Counts of (true label, predicted label or rejection).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConfusionTally {
    labels: BTreeSet<String>,
    cells: BTreeMap<(String, Option<String>), usize>,
}

impl ConfusionTally {
    pub fn new<I, S>(labels: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            labels: labels.into_iter().map(Into::into).collect(),
            cells: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, truth: &str, predicted: Option<&str>) {
        self.labels.insert(truth.to_string());
        if let Some(p) = predicted {
            self.labels.insert(p.to_string());
        }
        *self
            .cells
            .entry((truth.to_string(), predicted.map(str::to_string)))
            .or_insert(0) += 1;
    }

    pub fn count(&self, truth: &str, predicted: Option<&str>) -> usize {
        self.cells
            .get(&(truth.to_string(), predicted.map(str::to_string)))
            .copied()
            .unwrap_or(0)
    }

    /// Messages whose true label is `truth`, whatever was predicted.
    pub fn row_total(&self, truth: &str) -> usize {
        self.cells
            .iter()
            .filter(|((t, _), _)| t == truth)
            .map(|(_, n)| n)
            .sum()
    }

    pub fn total(&self) -> usize {
        self.cells.values().sum()
    }

    /// Macro metrics. A rejection is a false negative for the true label only;
    /// an empty denominator gives 0.
    pub fn metrics(&self) -> FoldMetrics {
        let mut per_label = BTreeMap::new();
        for label in &self.labels {
            let tp = self.count(label, Some(label));
            let predicted: usize = self
                .cells
                .iter()
                .filter(|((_, p), _)| p.as_deref() == Some(label.as_str()))
                .map(|(_, n)| n)
                .sum();
            let actual = self.row_total(label);
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, actual);
            per_label.insert(
                label.clone(),
                LabelMetrics {
                    precision,
                    recall,
                    f1: harmonic(precision, recall),
                },
            );
        }
        let n = per_label.len().max(1) as f64;
        let precision = per_label.values().map(|m| m.precision).sum::<f64>() / n;
        let recall = per_label.values().map(|m| m.recall).sum::<f64>() / n;
        let total = self.total();
        let correct: usize = self.labels.iter().map(|l| self.count(l, Some(l))).sum();
        let rejected: usize = self
            .cells
            .iter()
            .filter(|((_, p), _)| p.is_none())
            .map(|(_, n)| n)
            .sum();
        FoldMetrics {
            precision,
            recall,
            f1: harmonic(precision, recall),
            accuracy: ratio(correct, total),
            total,
            rejected,
            per_label,
        }
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn harmonic(p: f64, r: f64) -> f64 {
    if p * r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub variant: Variant,
    pub alpha: f64,
    pub tau_cluster: f64,
    pub tau_match: f64,
    pub confidence_threshold: f64,
    pub wboc_denominator: WbocDenominator,
    pub k: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FoldVariance {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    /// Fold averages of the macro metrics; `f1` is the harmonic mean of the
    /// averaged precision and recall.
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub rejection_rate: f64,
    pub variance: FoldVariance,
    pub per_label: BTreeMap<String, LabelMetrics>,
    pub folds: usize,
    pub test_messages: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub config: ReportConfig,
    pub metrics: EvalMetrics,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn mean(xs: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = xs.clone().count().max(1) as f64;
    let m = xs.clone().sum::<f64>() / n;
    let var = xs.map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, var)
}

pub fn aggregate(folds: &[FoldMetrics]) -> EvalMetrics {
    let (precision, vp) = mean(folds.iter().map(|f| f.precision));
    let (recall, vr) = mean(folds.iter().map(|f| f.recall));
    let (_, vf) = mean(folds.iter().map(|f| f.f1));
    let (accuracy, va) = mean(folds.iter().map(|f| f.accuracy));
    let (rejection_rate, _) = mean(folds.iter().map(|f| ratio(f.rejected, f.total)));
    let labels: BTreeSet<&String> = folds.iter().flat_map(|f| f.per_label.keys()).collect();
    let per_label = labels
        .into_iter()
        .map(|l| {
            let get = |pick: fn(&LabelMetrics) -> f64| {
                mean(
                    folds
                        .iter()
                        .map(move |f| f.per_label.get(l).map_or(0.0, pick)),
                )
                .0
            };
            let (p, r) = (get(|m| m.precision), get(|m| m.recall));
            (
                l.clone(),
                LabelMetrics {
                    precision: p,
                    recall: r,
                    f1: harmonic(p, r),
                },
            )
        })
        .collect();
    EvalMetrics {
        precision,
        recall,
        f1: harmonic(precision, recall),
        accuracy,
        rejection_rate,
        variance: FoldVariance {
            precision: vp,
            recall: vr,
            f1: vf,
            accuracy: va,
        },
        per_label,
        folds: folds.len(),
        test_messages: folds.iter().map(|f| f.total).sum(),
    }
}

/// Alpha-independent scores for one fold: label order plus, per test
/// message, its corpus index and one (wboc, sequence) pair per label.
struct FoldScores {
    labels: Vec<String>,
    rows: Vec<(usize, Vec<(f64, f64)>)>,
}

impl FoldScores {
    fn tally(&self, corpus: &LabeledCorpus, alpha: f64, threshold: f64) -> ConfusionTally {
        let mut tally = ConfusionTally::new(self.labels.iter().cloned());
        for (idx, scores) in &self.rows {
            let chosen = pick_label(
                self.labels
                    .iter()
                    .zip(scores)
                    .map(|(l, &(w, c))| (l.as_str(), mix(w, c, alpha))),
                threshold,
            );
            let truth = corpus.messages()[*idx]
                .label
                .as_deref()
                .expect("plan covers labeled messages");
            tally.add(truth, chosen.map(|c| c.0));
        }
        tally
    }
}

/// Keyword sequences for every corpus message, in corpus order.
pub fn extract_all(
    corpus: &LabeledCorpus,
    tagger: &Tagger,
) -> Result<Vec<KeywordSequence>, EvalError> {
    corpus
        .messages()
        .par_iter()
        .map(|m| {
            tagger
                .keywords(Some(&m.id), &m.text)
                .map_err(EvalError::from)
        })
        .collect()
}

fn score_folds(
    corpus: &LabeledCorpus,
    keywords: &[KeywordSequence],
    table: &Arc<EmbeddingTable>,
    config: PipelineConfig,
    plan: &FoldPlan,
    scorer: SequenceScorer,
) -> Result<Vec<FoldScores>, EvalError> {
    (0..plan.k)
        .into_par_iter()
        .map(|f| {
            let train = plan.groups[f].iter().map(|&i| {
                let label = corpus.messages()[i].label.clone().expect("labeled");
                (label, keywords[i].clone())
            });
            let store = ModelStore::build(config, table.clone(), train)?;
            let labels: Vec<String> = store.labels().keys().cloned().collect();
            let rows = plan
                .test_indices(f)
                .into_iter()
                .map(|i| {
                    let scores = store.score_keywords(&keywords[i], scorer)?;
                    Ok((i, scores.into_iter().map(|s| (s.wboc, s.csm)).collect()))
                })
                .collect::<Result<Vec<_>, PipelineError>>()?;
            Ok(FoldScores { labels, rows })
        })
        .collect()
}

fn variant_setup(config: PipelineConfig, variant: Variant) -> (PipelineConfig, SequenceScorer) {
    match variant {
        Variant::Full => (config, SequenceScorer::Csm),
        Variant::Baseline => (config.with_alpha(1.0), SequenceScorer::Disabled),
        Variant::Stasis => (config, SequenceScorer::Stasis),
    }
}

fn report_for(
    corpus: &LabeledCorpus,
    folds: &[FoldScores],
    config: PipelineConfig,
    plan: &FoldPlan,
    variant: Variant,
) -> EvalReport {
    let per_fold: Vec<FoldMetrics> = folds
        .iter()
        .map(|f| {
            f.tally(corpus, config.alpha, config.confidence_threshold)
                .metrics()
        })
        .collect();
    EvalReport {
        config: ReportConfig {
            variant,
            alpha: config.alpha,
            tau_cluster: config.tau_cluster,
            tau_match: config.tau_match,
            confidence_threshold: config.confidence_threshold,
            wboc_denominator: config.wboc_denominator,
            k: plan.k,
            seed: plan.seed,
        },
        metrics: aggregate(&per_fold),
    }
}

/// Runs every fold of `plan` under `variant`. Folds run in parallel; the
/// report does not depend on scheduling.
pub fn evaluate(
    corpus: &LabeledCorpus,
    table: &Arc<EmbeddingTable>,
    tagger: &Tagger,
    config: PipelineConfig,
    plan: &FoldPlan,
    variant: Variant,
) -> Result<EvalReport, EvalError> {
    config.validate()?;
    plan.check(corpus)?;
    let keywords = extract_all(corpus, tagger)?;
    let (config, scorer) = variant_setup(config, variant);
    let folds = score_folds(corpus, &keywords, table, config, plan, scorer)?;
    Ok(report_for(corpus, &folds, config, plan, variant))
}

/// One full-variant report per alpha. Scores are computed once and reused,
/// since only the final mix depends on alpha.
pub fn alpha_sweep(
    corpus: &LabeledCorpus,
    table: &Arc<EmbeddingTable>,
    tagger: &Tagger,
    config: PipelineConfig,
    plan: &FoldPlan,
    alphas: &[f64],
) -> Result<Vec<EvalReport>, EvalError> {
    if alphas.is_empty() {
        return Err(EvalError::EmptyAlphas);
    }
    let configs: Vec<PipelineConfig> = alphas.iter().map(|&a| config.with_alpha(a)).collect();
    for c in &configs {
        c.validate()?;
    }
    plan.check(corpus)?;
    let keywords = extract_all(corpus, tagger)?;
    let folds = score_folds(corpus, &keywords, table, config, plan, SequenceScorer::Csm)?;
    Ok(configs
        .into_iter()
        .map(|c| report_for(corpus, &folds, c, plan, Variant::Full))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_synthetic_corpus, SmsMessage};
    use crate::embeddings::demo_embedding_table;

    fn corpus(labels: &[(&str, usize)]) -> LabeledCorpus {
        let mut msgs = Vec::new();
        for (l, n) in labels {
            for i in 0..*n {
                msgs.push(SmsMessage::new(
                    format!("{l}{i}"),
                    format!("text {i}"),
                    Some(l.to_string()),
                ));
            }
        }
        LabeledCorpus::new(msgs).unwrap()
    }

    #[test]
    fn kfold_group_sizes() {
        let c = corpus(&[("a", 120)]);
        let plan = partition_kfold(&c, 60, 42).unwrap();
        assert_eq!(plan.groups.len(), 60);
        assert!(plan.groups.iter().all(|g| g.len() == 2));
        plan.check(&c).unwrap();

        let c = corpus(&[("a", 7), ("b", 5)]);
        let plan = partition_kfold(&c, 3, 1).unwrap();
        let sizes: Vec<usize> = plan.groups.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![5, 4, 3]);
        assert_eq!(plan.test_indices(0).len(), 7);
    }

    #[test]
    fn kfold_errors() {
        let c = corpus(&[("a", 10), ("b", 3)]);
        assert!(matches!(
            partition_kfold(&c, 1, 0),
            Err(EvalError::KTooSmall(1))
        ));
        assert!(matches!(
            partition_kfold(&c, 4, 0),
            Err(EvalError::KTooLarge { count: 3, .. })
        ));
        assert_eq!(
            partition_kfold(&c, 3, 9).unwrap(),
            partition_kfold(&c, 3, 9).unwrap()
        );
    }

    #[test]
    fn hand_built_confusion() {
        let mut t = ConfusionTally::new(["A", "B"]);
        for _ in 0..3 {
            t.add("A", Some("A"));
        }
        t.add("A", Some("B"));
        t.add("B", Some("B"));
        t.add("B", Some("B"));
        t.add("B", None);
        let m = t.metrics();
        assert!((m.precision - 5.0 / 6.0).abs() < 1e-12);
        assert!((m.recall - (0.75 + 2.0 / 3.0) / 2.0).abs() < 1e-12);
        assert!((m.recall - 0.7083).abs() < 1e-4);
        assert_eq!(m.rejected, 1);
        assert_eq!(t.row_total("A"), 4);
        assert_eq!(t.row_total("B"), 3);
        assert!((m.accuracy - 5.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn rejecting_everything() {
        let mut t = ConfusionTally::new(["A", "B"]);
        t.add("A", None);
        t.add("B", None);
        let m = t.metrics();
        assert_eq!(
            (m.precision, m.recall, m.f1, m.accuracy),
            (0.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn duplicated_texts_retrieve_perfectly() {
        // Every label has one text repeated, so each fold's training group
        // contains the exact test message.
        let mut msgs = Vec::new();
        let texts = [
            ("otp", "Your OTP is 4321"),
            ("flight", "Your flight departs from gate 4"),
        ];
        for (l, text) in texts {
            for i in 0..4 {
                msgs.push(SmsMessage::new(
                    format!("{l}{i}"),
                    text,
                    Some(l.to_string()),
                ));
            }
        }
        let c = LabeledCorpus::new(msgs).unwrap();
        let table = Arc::new(demo_embedding_table(50, 42).unwrap());
        let plan = partition_kfold(&c, 2, 42).unwrap();
        let r = evaluate(
            &c,
            &table,
            &Tagger::default(),
            PipelineConfig::default(),
            &plan,
            Variant::Full,
        )
        .unwrap();
        assert_eq!(r.metrics.accuracy, 1.0);
        assert_eq!(
            (r.metrics.precision, r.metrics.recall, r.metrics.f1),
            (1.0, 1.0, 1.0)
        );
        assert_eq!(r.metrics.test_messages, 8);
    }

    #[test]
    fn sweep_matches_uncached_evaluation() {
        let labels: BTreeSet<String> = ["Flight Alerts", "Login OTP", "Food Offer"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let c = generate_synthetic_corpus(&labels, 12, 5).unwrap();
        let table = Arc::new(demo_embedding_table(50, 42).unwrap());
        let tagger = Tagger::default();
        let plan = partition_kfold(&c, 4, 42).unwrap();
        let cfg = PipelineConfig::default();
        let sweep = alpha_sweep(&c, &table, &tagger, cfg, &plan, &[0.6, 0.9, 0.9]).unwrap();
        assert_eq!(sweep.len(), 3);
        assert_eq!(sweep[1], sweep[2]);
        for r in &sweep {
            let direct = evaluate(
                &c,
                &table,
                &tagger,
                cfg.with_alpha(r.config.alpha),
                &plan,
                Variant::Full,
            )
            .unwrap();
            assert_eq!(&direct, r);
        }
        assert!(matches!(
            alpha_sweep(&c, &table, &tagger, cfg, &plan, &[]),
            Err(EvalError::EmptyAlphas)
        ));
    }

    #[test]
    fn plan_mismatch_detected() {
        let c = corpus(&[("a", 4)]);
        let mut plan = partition_kfold(&c, 2, 0).unwrap();
        let dup = plan.groups[1][0];
        plan.groups[0].push(dup);
        assert!(plan.check(&c).is_err());
        let other = corpus(&[("a", 6)]);
        assert!(partition_kfold(&c, 2, 0).unwrap().check(&other).is_err());
    }
}
