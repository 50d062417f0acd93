use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::corpus::SmsMessage;
use crate::csm::csm_label_score;
use crate::pipeline::ModelStore;
use crate::tagger::Tagger;
use crate::wboc::wboc_score;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub mean_ms: f64,
    pub p95_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub messages: usize,
    pub repetitions: usize,
    /// Keyword extraction, cluster scoring, sequence scoring and full predict,
    /// all per message.
    pub stages: Vec<StageTiming>,
    pub model_bytes: usize,
    pub embedding_bytes: usize,
}

impl BenchReport {
    pub fn stage(&self, name: &str) -> Option<&StageTiming> {
        self.stages.iter().find(|s| s.stage == name)
    }
}

fn summarize(stage: &str, mut samples: Vec<f64>) -> StageTiming {
    samples.sort_by(f64::total_cmp);
    let mean_ms = samples.iter().sum::<f64>() / samples.len() as f64;
    // nearest rank
    let rank = ((0.95 * samples.len() as f64).ceil() as usize).clamp(1, samples.len());
    StageTiming {
        stage: stage.to_string(),
        mean_ms,
        p95_ms: samples[rank - 1],
    }
}

fn ms(start: Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

/// Times each pipeline stage on every message, `repetitions` times over.
pub fn benchmark(
    store: &ModelStore,
    tagger: &Tagger,
    messages: &[SmsMessage],
    repetitions: usize,
) -> Result<BenchReport, EvalError> {
    if messages.is_empty() {
        return Err(EvalError::NoMessages);
    }
    if repetitions == 0 {
        return Err(EvalError::ZeroRepetitions);
    }
    if store.is_empty() {
        return Err(crate::pipeline::PipelineError::EmptyStore.into());
    }
    let cfg = *store.config();
    let table = store.table();
    let n = messages.len() * repetitions;
    let (mut kw_t, mut wboc_t, mut csm_t, mut full_t) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for _ in 0..repetitions {
        for m in messages {
            let t = Instant::now();
            let kw = tagger.keywords(Some(&m.id), &m.text)?;
            kw_t.push(ms(t));

            let t = Instant::now();
            for model in store.labels().values() {
                std::hint::black_box(wboc_score(model, &kw, table, cfg.wboc_denominator));
            }
            wboc_t.push(ms(t));

            let t = Instant::now();
            for model in store.labels().values() {
                std::hint::black_box(
                    csm_label_score(model, &kw, table, cfg.tau_match)
                        .map_err(crate::pipeline::PipelineError::from)?,
                );
            }
            csm_t.push(ms(t));

            let t = Instant::now();
            std::hint::black_box(store.predict(m, tagger)?);
            full_t.push(ms(t));
        }
    }
    Ok(BenchReport {
        messages: messages.len(),
        repetitions,
        stages: vec![
            summarize("keywords", kw_t),
            summarize("wboc", wboc_t),
            summarize("csm", csm_t),
            summarize("predict", full_t),
        ],
        model_bytes: store.memory_bytes(),
        embedding_bytes: table.memory_bytes(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embeddings::demo_embedding_table;
    use crate::pipeline::PipelineConfig;
    use std::sync::Arc;

    #[test]
    fn single_message_report_shape() {
        let tagger = Tagger::default();
        let table = Arc::new(demo_embedding_table(50, 42).unwrap());
        let mut store = ModelStore::new(PipelineConfig::default(), table).unwrap();
        store
            .assign_text("Login OTP", "Your OTP is 4321", &tagger)
            .unwrap();
        let msgs = [SmsMessage::new("m1", "Your OTP is 9921", None)];
        let r = benchmark(&store, &tagger, &msgs, 1).unwrap();
        assert_eq!(r.stages.len(), 4);
        assert!(r.stages.iter().all(|s| s.mean_ms >= 0.0 && s.p95_ms >= 0.0));
        assert!(r.model_bytes > 0);
        assert!(r.stage("predict").is_some());
        assert!(matches!(
            benchmark(&store, &tagger, &[], 1),
            Err(EvalError::NoMessages)
        ));
        assert!(matches!(
            benchmark(&store, &tagger, &msgs, 0),
            Err(EvalError::ZeroRepetitions)
        ));
    }

    #[test]
    fn p95_nearest_rank() {
        let s = summarize("x", (1..=20).map(f64::from).collect());
        assert_eq!(s.p95_ms, 19.0);
        assert_eq!(s.mean_ms, 10.5);
    }
}
