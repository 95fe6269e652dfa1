//! Report emission for suite metrics.

use crate::suite::SuiteMetrics;
use std::fmt::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ReportFormat {
    Json,
    Text,
}

pub fn emit_report(metrics: &SuiteMetrics, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            serde_json::to_string_pretty(metrics).expect("metrics always serialize")
        }
        ReportFormat::Text => emit_text(metrics),
    }
}

fn emit_text(m: &SuiteMetrics) -> String {
    let pct = |v: f64| format!("{:.2}%", v * 100.0);
    let opt = |v: Option<f64>, unit: &str| match v {
        Some(v) => format!("{v:.4}{unit}"),
        None => "n/a".to_owned(),
    };
    let mut out = String::new();
    let mut line = |k: &str, v: String| {
        let _ = writeln!(out, "{k:<28}{v}");
    };
    line("examples", m.examples.to_string());
    line("errored", m.errored.to_string());
    line("attacked", m.attacked.to_string());
    line("original accuracy", pct(m.original_accuracy));
    line("after-attack accuracy", pct(m.after_attack_accuracy));
    line("success rate", pct(m.success_rate));
    line(
        "avg perturbation",
        opt(m.avg_perturbation.map(|v| v * 100.0), "%"),
    );
    line("avg similarity", opt(m.avg_similarity, ""));
    line("total queries", m.total_queries.to_string());
    line(
        "perturbation filter",
        format!(
            "> {} filtered out {} successes (counted as failures)",
            pct(m.max_pert_filter),
            m.filtered_out
        ),
    );
    if let Some(g) = m.grammar_error_increase {
        line("grammar error increase", format!("{g:+.4}"));
    }
    if m.attacked == 0 {
        line("note", "no correctly-classified examples; nothing attacked".into());
    }
    out
}
