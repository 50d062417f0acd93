//! Line-oriented tag-and-predict session.
//!
//! Commands: `tag <label> <text>`, `new <text>`, `labels`, `save`, `help`,
//! `quit`. Arguments may be double-quoted. Nothing is written to disk until
//! `save`.

use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use anyhow::{Context, Result};

use smsim_core::pipeline::{ModelStore, PipelineConfig};
use smsim_core::{EmbeddingTable, Tagger};

const PROMPT: &str = "smsim> ";
const HELP: &str = "commands: tag <label> <text> | new <text> | labels | save | help | quit";

/// Loads the store at `path`, or starts an empty one under `config` when the
/// file does not exist yet.
pub fn open_store(
    path: &Path,
    table: Arc<EmbeddingTable>,
    config: PipelineConfig,
) -> Result<ModelStore> {
    if path.exists() {
        ModelStore::load(path, table)
            .with_context(|| format!("cannot open store {}", path.display()))
    } else {
        Ok(ModelStore::new(config, table)?)
    }
}

/// Splits on whitespace, keeping double-quoted runs together.
pub fn split_args(line: &str) -> Result<Vec<String>, String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let mut in_quotes = false;
    let mut has_token = false;
    for ch in line.chars() {
        match ch {
            '"' => {
                in_quotes = !in_quotes;
                has_token = true;
            }
            c if c.is_whitespace() && !in_quotes => {
                if has_token {
                    out.push(std::mem::take(&mut cur));
                    has_token = false;
                }
            }
            c => {
                cur.push(c);
                has_token = true;
            }
        }
    }
    if in_quotes {
        return Err("unterminated quote".to_string());
    }
    if has_token {
        out.push(cur);
    }
    Ok(out)
}

enum Step {
    Continue,
    Quit,
}

/// Runs the session until `quit` or end of input. Output depends only on the
/// input lines, so a recorded transcript replays identically.
pub fn run_repl<R: BufRead, W: Write + ?Sized>(
    mut store: ModelStore,
    path: &Path,
    tagger: &Tagger,
    mut input: R,
    out: &mut W,
) -> Result<()> {
    let mut line = String::new();
    loop {
        write!(out, "{PROMPT}")?;
        out.flush()?;
        line.clear();
        if input.read_line(&mut line)? == 0 {
            writeln!(out)?;
            return Ok(());
        }
        match step(&mut store, path, tagger, line.trim(), &mut input, out) {
            Ok(Step::Continue) => {}
            Ok(Step::Quit) => return Ok(()),
            Err(e) => writeln!(out, "error: {e:#}")?,
        }
    }
}

fn step<R: BufRead, W: Write + ?Sized>(
    store: &mut ModelStore,
    path: &Path,
    tagger: &Tagger,
    line: &str,
    input: &mut R,
    out: &mut W,
) -> Result<Step> {
    let args = split_args(line).map_err(anyhow::Error::msg)?;
    let Some(cmd) = args.first() else {
        return Ok(Step::Continue);
    };
    match cmd.as_str() {
        "tag" => {
            if args.len() < 3 {
                anyhow::bail!("usage: tag <label> <text>");
            }
            let label = &args[1];
            store.assign_text(label, &args[2..].join(" "), tagger)?;
            let n = store.label(label).map_or(0, |m| m.tagged.len());
            writeln!(out, "tagged under {label} ({n} messages)")?;
        }
        "new" => {
            if args.len() < 2 {
                anyhow::bail!("usage: new <text>");
            }
            let text = args[1..].join(" ");
            if store.is_empty() {
                writeln!(out, "NONE")?;
                return Ok(Step::Continue);
            }
            let r = store.predict_text(&text, tagger)?;
            let (Some(label), Some(conf)) = (r.chosen, r.confidence) else {
                writeln!(out, "NONE")?;
                return Ok(Step::Continue);
            };
            write!(out, "suggest {label} ({conf:.4}). move? [y/n] ")?;
            out.flush()?;
            let mut answer = String::new();
            input.read_line(&mut answer)?;
            let answer = answer.trim().to_ascii_lowercase();
            writeln!(out)?;
            if answer == "y" || answer == "yes" {
                store.assign_text(&label, &text, tagger)?;
                writeln!(out, "moved to {label}")?;
            } else {
                writeln!(out, "left unlabeled")?;
            }
        }
        "labels" => {
            if store.is_empty() {
                writeln!(out, "no labels")?;
            }
            for (name, model) in store.labels() {
                writeln!(
                    out,
                    "{name}\t{} messages\t{} clusters",
                    model.tagged.len(),
                    model.clusters.len()
                )?;
            }
        }
        "save" => {
            store.save(path)?;
            writeln!(
                out,
                "saved {} labels to {}",
                store.labels().len(),
                path.display()
            )?;
        }
        "help" => writeln!(out, "{HELP}")?,
        "quit" | "exit" => return Ok(Step::Quit),
        other => anyhow::bail!("unknown command {other:?}; {HELP}"),
    }
    Ok(Step::Continue)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_quoted_args() {
        assert_eq!(
            split_args(r#"tag OTP "Your OTP is 4321""#).unwrap(),
            vec!["tag", "OTP", "Your OTP is 4321"]
        );
        assert_eq!(split_args("  labels ").unwrap(), vec!["labels"]);
        assert_eq!(split_args(r#"tag "" x"#).unwrap(), vec!["tag", "", "x"]);
        assert!(split_args(r#"new "open"#).is_err());
    }
}
