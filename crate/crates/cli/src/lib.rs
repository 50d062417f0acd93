//! Argument definitions and command implementations for the `smsim` binary.

pub mod repl;

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use smsim_core::corpus::{
    compute_kappa, generate_synthetic_corpus, kappa_from_rates, load_annotations, load_corpus,
    KappaReport, BUILTIN_LABELS,
};
use smsim_core::embeddings::{demo_embedding_table, load_embedding_table, DEFAULT_DIM};
use smsim_core::eval::{
    alpha_sweep, benchmark, evaluate, partition_kfold, render_comparison_table, render_report,
    render_sweep_table, EvalReport, Variant, DEFAULT_K,
};
use smsim_core::pipeline::{ModelStore, PipelineConfig, PredictionResult};
use smsim_core::tagger::{
    load_emissions, load_lexicon, load_viterbi_model, ExternalTagger, LexiconTagger, Tagger,
};
use smsim_core::wboc::WbocDenominator;
use smsim_core::{EmbeddingTable, LabeledCorpus};

#[derive(Debug, Parser)]
#[command(
    name = "smsim",
    version,
    about = "Few-shot SMS labeling by sentence similarity"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a synthetic labeled corpus (and optionally demo embeddings).
    GenCorpus(GenCorpusArgs),
    /// Build a model store from labeled messages.
    Build(BuildArgs),
    /// Predict labels for a text or every message of a corpus.
    Predict(PredictArgs),
    /// Run the inverted k-fold evaluation.
    Evaluate(EvaluateArgs),
    /// Evaluate several alpha values over one set of scores.
    Sweep(SweepArgs),
    /// Inter-annotator agreement.
    Kappa(KappaArgs),
    /// Time the pipeline stages.
    Bench(BenchArgs),
    /// Interactive tag-and-predict session.
    Repl(ReplArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ConfigArgs {
    /// Weight of the cluster score.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Minimum confidence for a prediction.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub tau_cluster: Option<f64>,
    #[arg(long)]
    pub tau_match: Option<f64>,
    /// `selected` or `literal`.
    #[arg(long, value_parser = parse_denominator)]
    pub wboc_denominator: Option<WbocDenominator>,
}

fn parse_denominator(s: &str) -> Result<WbocDenominator, String> {
    match s {
        "selected" => Ok(WbocDenominator::Selected),
        "literal" => Ok(WbocDenominator::Literal),
        other => Err(format!("expected selected or literal, got {other:?}")),
    }
}

impl ConfigArgs {
    pub fn apply(&self, mut cfg: PipelineConfig) -> Result<PipelineConfig> {
        if let Some(v) = self.alpha {
            cfg.alpha = v;
        }
        if let Some(v) = self.threshold {
            cfg.confidence_threshold = v;
        }
        if let Some(v) = self.tau_cluster {
            cfg.tau_cluster = v;
        }
        if let Some(v) = self.tau_match {
            cfg.tau_match = v;
        }
        if let Some(v) = self.wboc_denominator {
            cfg.wboc_denominator = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Args)]
pub struct TaggerArgs {
    /// Extra `word<TAB>TAG` lexicon entries, overriding the built-in ones.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// Per-message tag emissions (JSON Lines) decoded instead of the lexicon.
    #[arg(long)]
    pub emissions: Option<PathBuf>,
    /// Start and transition scores for decoding the emissions.
    #[arg(long, requires = "emissions")]
    pub crf: Option<PathBuf>,
}

impl TaggerArgs {
    pub fn load(&self) -> Result<Tagger> {
        if let Some(path) = &self.emissions {
            let records = load_emissions(path)?;
            let model = self.crf.as_ref().map(load_viterbi_model).transpose()?;
            return Ok(Tagger::External(ExternalTagger::new(records, model)?));
        }
        let mut lexicon = LexiconTagger::default();
        if let Some(path) = &self.lexicon {
            lexicon.extend(load_lexicon(path)?);
        }
        Ok(Tagger::Lexicon(lexicon))
    }
}

#[derive(Debug, Clone, Args)]
pub struct EmbeddingArgs {
    /// GloVe text file.
    #[arg(long)]
    pub embeddings: PathBuf,
    /// Expected vector dimension.
    #[arg(long)]
    pub dim: Option<usize>,
}

impl EmbeddingArgs {
    pub fn load(&self) -> Result<Arc<EmbeddingTable>> {
        Ok(Arc::new(load_embedding_table(&self.embeddings, self.dim)?))
    }
}

#[derive(Debug, Args)]
pub struct GenCorpusArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated label names; defaults to the seven built-in labels.
    #[arg(long, value_delimiter = ',')]
    pub labels: Vec<String>,
    #[arg(long, default_value_t = 120)]
    pub per_label: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Also write the demo embedding table here.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_DIM)]
    pub dim: usize,
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub embeddings: EmbeddingArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Use only the first N messages of each label.
    #[arg(long)]
    pub per_label: Option<usize>,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub tagger: TaggerArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub embeddings: EmbeddingArgs,
    #[arg(long, conflicts_with = "corpus", required_unless_present = "corpus")]
    pub text: Option<String>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Print JSON instead of tables.
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub tagger: TaggerArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub embeddings: EmbeddingArgs,
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value = "full")]
    pub variant: Variant,
    /// Run all three variants and print them side by side.
    #[arg(long, conflicts_with = "variant")]
    pub compare: bool,
    /// Write the report(s) as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub tagger: TaggerArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[command(flatten)]
    pub embeddings: EmbeddingArgs,
    #[arg(long, value_delimiter = ',', default_value = "0.6,0.7,0.8,0.9")]
    pub alphas: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub tagger: TaggerArgs,
}

#[derive(Debug, Args)]
pub struct KappaArgs {
    /// Annotation file (JSON Lines with id, annotator, label).
    #[arg(long, required_unless_present_all = ["pa", "pe"])]
    pub annotations: Option<PathBuf>,
    /// Observed agreement, used with --pe instead of an annotation file.
    #[arg(long, requires = "pe", conflicts_with = "annotations")]
    pub pa: Option<f64>,
    #[arg(long, requires = "pa", conflicts_with = "annotations")]
    pub pe: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub embeddings: EmbeddingArgs,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = 3)]
    pub repetitions: usize,
    /// Only time the first N messages.
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub tagger: TaggerArgs,
}

#[derive(Debug, Args)]
pub struct ReplArgs {
    /// Store file; created on `save` if missing.
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub embeddings: EmbeddingArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    #[command(flatten)]
    pub tagger: TaggerArgs,
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn load_labeled(path: &Path) -> Result<LabeledCorpus> {
    let corpus = load_corpus(path)?;
    if corpus.labels().is_empty() {
        bail!("{} has no labeled messages", path.display());
    }
    Ok(corpus)
}

/// Runs one parsed command, writing its normal output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::GenCorpus(a) => gen_corpus(a, out),
        Command::Build(a) => build(a, out),
        Command::Predict(a) => predict(a, out),
        Command::Evaluate(a) => run_evaluate(a, out),
        Command::Sweep(a) => sweep(a, out),
        Command::Kappa(a) => kappa(a, out),
        Command::Bench(a) => bench(a, out),
        Command::Repl(a) => {
            let tagger = a.tagger.load()?;
            let table = a.embeddings.load()?;
            let store =
                repl::open_store(&a.model, table, a.config.apply(PipelineConfig::default())?)?;
            let stdin = std::io::stdin();
            repl::run_repl(store, &a.model, &tagger, stdin.lock(), out)
        }
    }
}

fn gen_corpus(a: GenCorpusArgs, out: &mut dyn Write) -> Result<()> {
    let labels: BTreeSet<String> = if a.labels.is_empty() {
        BUILTIN_LABELS.iter().map(|s| s.to_string()).collect()
    } else {
        a.labels.iter().map(|s| s.trim().to_string()).collect()
    };
    let corpus = generate_synthetic_corpus(&labels, a.per_label, a.seed)?;
    let mut w = BufWriter::new(
        File::create(&a.out).with_context(|| format!("cannot create {}", a.out.display()))?,
    );
    corpus.write_jsonl(&mut w)?;
    w.flush()?;
    writeln!(
        out,
        "wrote {} messages to {}",
        corpus.len(),
        a.out.display()
    )?;
    if let Some(path) = &a.embeddings {
        let table = demo_embedding_table(a.dim, a.seed)?;
        let mut w = BufWriter::new(
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
        );
        table.write_glove(&mut w)?;
        w.flush()?;
        writeln!(
            out,
            "wrote {} {}-d vectors to {}",
            table.len(),
            table.dim(),
            path.display()
        )?;
    }
    Ok(())
}

/// Store built from the corpus in file order, optionally keeping only the
/// first `per_label` messages of every label.
pub fn build_store(
    corpus: &LabeledCorpus,
    table: Arc<EmbeddingTable>,
    tagger: &Tagger,
    config: PipelineConfig,
    per_label: Option<usize>,
) -> Result<ModelStore> {
    let mut taken = std::collections::BTreeMap::<&str, usize>::new();
    let mut store = ModelStore::new(config, table)?;
    for m in corpus.messages() {
        let Some(label) = m.label.as_deref() else {
            continue;
        };
        let n = taken.entry(label).or_default();
        if per_label.is_some_and(|cap| *n >= cap) {
            continue;
        }
        *n += 1;
        store.assign(m, label, tagger)?;
    }
    Ok(store)
}

fn build(a: BuildArgs, out: &mut dyn Write) -> Result<()> {
    let corpus = load_labeled(&a.corpus)?;
    let tagger = a.tagger.load()?;
    let table = a.embeddings.load()?;
    let cfg = a.config.apply(PipelineConfig::default())?;
    let store = build_store(&corpus, table, &tagger, cfg, a.per_label)?;
    store.save(&a.out)?;
    let tagged: usize = store.labels().values().map(|m| m.tagged.len()).sum();
    writeln!(
        out,
        "built {} labels from {} messages into {}",
        store.labels().len(),
        tagged,
        a.out.display()
    )?;
    Ok(())
}

/// Text rendering of one prediction.
pub fn render_prediction(r: &PredictionResult) -> String {
    let mut s = match (&r.chosen, r.confidence) {
        (Some(l), Some(c)) => format!("chosen: {l} ({c:.4})\n"),
        _ => "chosen: NONE\n".to_string(),
    };
    let width = r
        .labels
        .iter()
        .map(|l| l.label.len())
        .max()
        .unwrap_or(5)
        .max(5);
    s.push_str(&format!(
        "{:<width$}  {:>6}  {:>6}  {:>10}\n",
        "label", "wboc", "csm", "confidence"
    ));
    for l in &r.labels {
        s.push_str(&format!(
            "{:<width$}  {:>6.4}  {:>6.4}  {:>10.4}\n",
            l.label, l.wboc, l.csm, l.confidence
        ));
    }
    s
}

fn predict(a: PredictArgs, out: &mut dyn Write) -> Result<()> {
    let tagger = a.tagger.load()?;
    let table = a.embeddings.load()?;
    let mut store = ModelStore::load(&a.model, table)?;
    let cfg = a.config.apply(*store.config())?;
    store.set_config(cfg)?;
    if let Some(text) = &a.text {
        let r = store.predict_text(text, &tagger)?;
        if a.json {
            writeln!(out, "{}", serde_json::to_string(&r)?)?;
        } else {
            write!(out, "{}", render_prediction(&r))?;
        }
        return Ok(());
    }
    let path = a.corpus.as_ref().expect("clap enforces text or corpus");
    let corpus = load_corpus(path)?;
    for m in corpus.messages() {
        let r = store.predict(m, &tagger)?;
        if a.json {
            let line = serde_json::json!({ "id": m.id, "result": r });
            writeln!(out, "{line}")?;
        } else {
            let chosen = r.chosen.as_deref().unwrap_or("NONE");
            match r.confidence {
                Some(c) => writeln!(out, "{}\t{chosen}\t{c:.4}", m.id)?,
                None => writeln!(out, "{}\t{chosen}", m.id)?,
            }
        }
    }
    Ok(())
}

fn run_evaluate(a: EvaluateArgs, out: &mut dyn Write) -> Result<()> {
    let corpus = load_labeled(&a.corpus)?;
    let tagger = a.tagger.load()?;
    let table = a.embeddings.load()?;
    let cfg = a.config.apply(PipelineConfig::default())?;
    let plan = partition_kfold(&corpus, a.k, a.seed)?;
    if a.compare {
        let mut reports = Vec::new();
        for v in [Variant::Baseline, Variant::Stasis, Variant::Full] {
            reports.push(evaluate(&corpus, &table, &tagger, cfg, &plan, v)?);
        }
        let rows: Vec<(&str, &EvalReport)> = reports
            .iter()
            .map(|r| (r.config.variant.as_str(), r))
            .collect();
        write!(out, "{}", render_comparison_table(&rows))?;
        if let Some(path) = &a.out {
            write_file(path, &serde_json::to_string_pretty(&reports)?)?;
        }
        return Ok(());
    }
    let report = evaluate(&corpus, &table, &tagger, cfg, &plan, a.variant)?;
    write!(out, "{}", render_report(&report))?;
    if let Some(path) = &a.out {
        write_file(path, &report.to_json())?;
    }
    Ok(())
}

fn sweep(a: SweepArgs, out: &mut dyn Write) -> Result<()> {
    let corpus = load_labeled(&a.corpus)?;
    let tagger = a.tagger.load()?;
    let table = a.embeddings.load()?;
    let cfg = a.config.apply(PipelineConfig::default())?;
    let plan = partition_kfold(&corpus, a.k, a.seed)?;
    let reports = alpha_sweep(&corpus, &table, &tagger, cfg, &plan, &a.alphas)?;
    write!(out, "{}", render_sweep_table(&reports))?;
    if let Some(path) = &a.out {
        write_file(path, &serde_json::to_string_pretty(&reports)?)?;
    }
    Ok(())
}

fn fmt_omega(o: Option<f64>) -> String {
    o.map_or_else(|| "undefined".to_string(), |w| format!("{w:.4}"))
}

/// Kappa for every annotator pair, in annotator order.
pub fn kappa_pairs(path: &Path) -> Result<Vec<(String, String, KappaReport)>> {
    let sets = load_annotations(path)?;
    if sets.len() < 2 {
        bail!("{} needs at least two annotators", path.display());
    }
    let labels: BTreeSet<String> = sets
        .iter()
        .flat_map(|s| s.assignments.values().cloned())
        .collect();
    let mut out = Vec::new();
    for (i, a) in sets.iter().enumerate() {
        for b in &sets[i + 1..] {
            let r = compute_kappa(a, b, &labels)
                .with_context(|| format!("annotators {} and {}", a.annotator, b.annotator))?;
            out.push((a.annotator.clone(), b.annotator.clone(), r));
        }
    }
    Ok(out)
}

fn kappa(a: KappaArgs, out: &mut dyn Write) -> Result<()> {
    if let (Some(pa), Some(pe)) = (a.pa, a.pe) {
        if !(0.0..=1.0).contains(&pa) || !(0.0..=1.0).contains(&pe) {
            bail!("agreement rates must lie in [0, 1]");
        }
        let omega = kappa_from_rates(pa, pe);
        writeln!(out, "P_a={pa:.4} P_e={pe:.4} omega={}", fmt_omega(omega))?;
        if let Some(path) = &a.out {
            let doc = serde_json::json!({ "p_a": pa, "p_e": pe, "omega": omega });
            write_file(path, &serde_json::to_string_pretty(&doc)?)?;
        }
        return Ok(());
    }
    let path = a
        .annotations
        .as_ref()
        .expect("clap enforces annotations or rates");
    let pairs = kappa_pairs(path)?;
    for (x, y, r) in &pairs {
        writeln!(
            out,
            "{x} vs {y}: n={} agreements={} P_a={:.4} P_e={:.4} omega={}",
            r.n,
            r.agreements,
            r.p_a,
            r.p_e,
            fmt_omega(r.omega)
        )?;
    }
    let defined: Vec<f64> = pairs.iter().filter_map(|p| p.2.omega).collect();
    let mean = (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    if pairs.len() > 1 {
        writeln!(out, "mean omega={}", fmt_omega(mean))?;
    }
    if let Some(path) = &a.out {
        let doc: Vec<_> = pairs
            .iter()
            .map(|(x, y, r)| serde_json::json!({ "a": x, "b": y, "report": r }))
            .collect();
        write_file(
            path,
            &serde_json::to_string_pretty(
                &serde_json::json!({ "pairs": doc, "mean_omega": mean }),
            )?,
        )?;
    }
    Ok(())
}

fn bench(a: BenchArgs, out: &mut dyn Write) -> Result<()> {
    let tagger = a.tagger.load()?;
    let table = a.embeddings.load()?;
    let store = ModelStore::load(&a.model, table)?;
    let corpus = load_corpus(&a.corpus)?;
    let n = a.limit.unwrap_or(corpus.len()).min(corpus.len());
    let report = benchmark(&store, &tagger, &corpus.messages()[..n], a.repetitions)?;
    writeln!(
        out,
        "messages={} repetitions={}",
        report.messages, report.repetitions
    )?;
    writeln!(out, "{:<10}  {:>10}  {:>10}", "stage", "mean_ms", "p95_ms")?;
    for s in &report.stages {
        writeln!(
            out,
            "{:<10}  {:>10.4}  {:>10.4}",
            s.stage, s.mean_ms, s.p95_ms
        )?;
    }
    writeln!(
        out,
        "model_bytes={} embedding_bytes={}",
        report.model_bytes, report.embedding_bytes
    )?;
    if let Some(path) = &a.out {
        write_file(path, &serde_json::to_string_pretty(&report)?)?;
    }
    Ok(())
}
