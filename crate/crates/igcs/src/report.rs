//! Report serialization: JSON documents that embed the run configuration,
//! and fixed-width plain-text tables for the terminal.

use serde_json::{json, Value};

use igcs_core::metrics::{BenchmarkReport, ConfidenceInterval, EvalReport};

use crate::inference::CompareReport;
use crate::stats::DatasetStats;

/// Wraps a result body with the resolved run configuration, so every report
/// records exactly how it was produced.
pub fn with_config(config: Value, results: Value) -> Value {
    json!({ "config": config, "results": results })
}

fn triple_json(t: &igcs_core::metrics::ScoreTriple) -> Value {
    json!({ "precision": t.precision, "recall": t.recall, "f1": t.f1 })
}

fn ci_json(ci: &Option<ConfidenceInterval>) -> Value {
    match ci {
        Some(ci) => json!({ "low": ci.low, "high": ci.high, "alpha": ci.alpha }),
        None => Value::Null,
    }
}

fn eval_report_json(report: &EvalReport) -> Value {
    json!({
        "n": report.n,
        "mean": triple_json(&report.task_mean),
        "ci": ci_json(&report.ci),
        "instances": report
            .per_instance
            .iter()
            .map(|score| {
                json!({
                    "id": score.id,
                    "precision": score.score.precision,
                    "recall": score.score.recall,
                    "f1": score.score.f1,
                    "reference": score.chosen_ref,
                })
            })
            .collect::<Vec<_>>(),
    })
}

pub fn benchmark_json(report: &BenchmarkReport) -> Value {
    json!({
        "overall": triple_json(&report.overall),
        "overall_ci": ci_json(&report.overall_ci),
        "tasks": report
            .per_task
            .iter()
            .map(|(task, eval)| (task.clone(), eval_report_json(eval)))
            .collect::<serde_json::Map<String, Value>>(),
    })
}

fn format_ci(ci: &Option<ConfidenceInterval>) -> String {
    match ci {
        Some(ci) => format!("[{:.4}, {:.4}]", ci.low, ci.high),
        None => "-".to_string(),
    }
}

pub fn benchmark_table(report: &BenchmarkReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<20} {:>6} {:>10} {:>10} {:>10}  {}\n",
        "task", "n", "precision", "recall", "f1", "CI"
    ));
    for (task, eval) in &report.per_task {
        out.push_str(&format!(
            "{:<20} {:>6} {:>10.4} {:>10.4} {:>10.4}  {}\n",
            task,
            eval.n,
            eval.task_mean.precision,
            eval.task_mean.recall,
            eval.task_mean.f1,
            format_ci(&eval.ci),
        ));
    }
    let n: usize = report.per_task.values().map(|e| e.n).sum();
    out.push_str(&format!(
        "{:<20} {:>6} {:>10.4} {:>10.4} {:>10.4}  {}\n",
        "overall",
        n,
        report.overall.precision,
        report.overall.recall,
        report.overall.f1,
        format_ci(&report.overall_ci),
    ));
    out
}

pub fn compare_table(report: &CompareReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<20} {:>6} {:>10} {:>10} {:>12} {:>12}\n",
        "task", "n", "score", "delta", "sel tokens", "delta sel"
    ));
    for row in report.tasks.iter().chain(std::iter::once(&report.overall)) {
        out.push_str(&format!(
            "{:<20} {:>6} {:>10.4} {:>+10.4} {:>12.2} {:>+12.2}\n",
            row.task, row.n, row.score, row.delta_score, row.sel_tokens, row.delta_sel_tokens
        ));
    }
    out
}

fn bucket_label(floor: usize) -> String {
    if floor == 0 {
        "0".to_string()
    } else {
        format!("[{}, {})", floor, floor * 2)
    }
}

pub fn stats_table(stats: &DatasetStats) -> String {
    let mut out = format!("instances: {}\n\n", stats.instances);
    out.push_str(&format!(
        "{:<20} {:>8} {:>10} {:>8} {:>8}\n",
        "field", "n", "mean", "min", "max"
    ));
    let fields = [
        ("source tokens", &stats.source_tokens),
        ("selection tokens", &stats.selection_tokens),
        ("span tokens", &stats.span_tokens),
    ];
    for (name, field) in fields {
        out.push_str(&format!(
            "{:<20} {:>8} {:>10.2} {:>8} {:>8}\n",
            name, field.n, field.mean, field.min, field.max
        ));
    }
    for (name, field) in fields {
        if field.histogram.is_empty() {
            continue;
        }
        out.push_str(&format!("\n{name} histogram:\n"));
        for bucket in &field.histogram {
            out.push_str(&format!(
                "  {:<14} {}\n",
                bucket_label(bucket.floor),
                bucket.count
            ));
        }
    }
    out
}
