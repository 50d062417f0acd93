//! Plain-text tables for evaluation reports.

use std::fmt::Write;

use super::EvalReport;

const METRICS: [&str; 4] = ["Precision", "Recall", "F1", "Accuracy"];

fn values(r: &EvalReport) -> [f64; 4] {
    let m = &r.metrics;
    [m.precision, m.recall, m.f1, m.accuracy]
}

fn table(header: &[String], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut width = vec![0usize; cols];
    for row in std::iter::once(header).chain(rows.iter().map(Vec::as_slice)) {
        for (w, cell) in width.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |out: &mut String, row: &[String]| {
        let cells: Vec<String> = row
            .iter()
            .zip(&width)
            .enumerate()
            .map(|(i, (c, &w))| {
                if i == 0 {
                    format!("{c:<w$}")
                } else {
                    format!("{c:>w$}")
                }
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join("  ").trim_end());
    };
    line(&mut out, header);
    let rule: Vec<String> = width.iter().map(|&w| "-".repeat(w)).collect();
    line(&mut out, &rule);
    for row in rows {
        line(&mut out, row);
    }
    out
}

/// Metrics as rows and one column per alpha.
pub fn render_sweep_table(reports: &[EvalReport]) -> String {
    let mut header = vec!["Metric".to_string()];
    header.extend(
        reports
            .iter()
            .map(|r| format!("alpha={:.2}", r.config.alpha)),
    );
    let rows: Vec<Vec<String>> = METRICS
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let mut row = vec![name.to_string()];
            row.extend(reports.iter().map(|r| format!("{:.4}", values(r)[i])));
            row
        })
        .collect();
    table(&header, &rows)
}

/// One row per named method, metrics as columns.
pub fn render_comparison_table(rows: &[(&str, &EvalReport)]) -> String {
    let mut header = vec!["Method".to_string()];
    header.extend(METRICS.iter().map(|m| m.to_string()));
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|(name, r)| {
            let mut row = vec![name.to_string()];
            row.extend(values(r).iter().map(|v| format!("{v:.4}")));
            row
        })
        .collect();
    table(&header, &body)
}

/// Config line, headline metrics and the per-label breakdown.
pub fn render_report(r: &EvalReport) -> String {
    let c = &r.config;
    let m = &r.metrics;
    let mut out = format!(
        "variant={} alpha={} tau_cluster={} tau_match={} threshold={} k={} seed={}\n",
        c.variant, c.alpha, c.tau_cluster, c.tau_match, c.confidence_threshold, c.k, c.seed
    );
    out.push_str(&render_comparison_table(&[(c.variant.as_str(), r)]));
    let _ = writeln!(
        out,
        "folds={} test_messages={} rejection_rate={:.4}\n",
        m.folds, m.test_messages, m.rejection_rate
    );
    let header: Vec<String> = ["Label", "Precision", "Recall", "F1"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let rows: Vec<Vec<String>> = m
        .per_label
        .iter()
        .map(|(l, lm)| {
            vec![
                l.clone(),
                format!("{:.4}", lm.precision),
                format!("{:.4}", lm.recall),
                format!("{:.4}", lm.f1),
            ]
        })
        .collect();
    out.push_str(&table(&header, &rows));
    out
}
