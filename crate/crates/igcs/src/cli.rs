//! The `igcs` command-line tool.
//!
//! All randomness flows from `--seed` through labeled substreams, so reruns
//! with the same inputs and flags produce byte-identical output files.
//! Output files are written only after a command has fully computed its
//! results. Exit code 0 means no hard errors; per-instance failures are
//! recorded in the output files unless `--strict` promotes them.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use igcs_core::grounding::{ground_selection, DiscardReason, GroundingOutcome, GroundingPolicy};
use igcs_core::metrics::{
    agreement, aggregate_benchmark, bootstrap_ci, evaluate_task, ConfidenceInterval, EvalReport,
    Metric, TaskScores,
};
use igcs_core::rng::fnv1a;
use igcs_core::types::{Instance, Selection};

use crate::backend::{build_backend, load_backend_config};
use crate::dataset::{
    load_dataset, load_predictions, load_raw_selections, save_dataset, save_jsonl,
    save_predictions, Prediction, PredictionSpan,
};
use crate::inference::{compare_modes, run_dataset, InferOptions, Mode};
use crate::prompt::{icl_examples_from, PromptTemplate};
use crate::report;
use crate::stats::dataset_stats;
use crate::synthesis::{
    instances_from_records, load_synthesis_config, run_pipeline, MergeStrategy, SynthesisRecord,
};

#[derive(Parser)]
#[command(
    name = "igcs",
    version,
    about = "Instruction-guided content selection: evaluate, ground, infer, and synthesize"
)]
pub struct Cli {
    /// Root seed for every random choice this run makes.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Promote per-instance failures to a non-zero exit code.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Score predictions against references and report per-task means.
    Evaluate(EvaluateArgs),
    /// Map raw output strings onto source spans.
    Ground(GroundArgs),
    /// Run a dataset against a backend and ground the answers.
    Infer(InferArgs),
    /// Contrast whole-set and per-document prompting on the same backend.
    CompareModes(CompareModesArgs),
    /// Build an instruction-guided selection dataset from document sets.
    Synthesize(SynthesizeArgs),
    /// Inter-annotator agreement (mean pairwise token F1).
    Agreement(AgreementArgs),
    /// Token-count statistics for a dataset.
    Stats(StatsArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    /// Token-level F1 against the best-matching reference.
    TokenF1,
    /// Sentence-level F1, averaged over instances.
    SentenceF1,
    /// Sentence-level F1 with counts pooled across the task.
    SentenceF1Micro,
    /// Bigram overlap F1 between selected and reference text.
    Rouge2,
}

impl MetricArg {
    fn metric(self) -> Metric {
        match self {
            MetricArg::TokenF1 => Metric::TokenF1,
            MetricArg::SentenceF1 => Metric::SentenceF1,
            MetricArg::SentenceF1Micro => Metric::SentenceF1Micro,
            MetricArg::Rouge2 => Metric::Rouge2,
        }
    }

    fn name(self) -> &'static str {
        match self {
            MetricArg::TokenF1 => "token-f1",
            MetricArg::SentenceF1 => "sentence-f1",
            MetricArg::SentenceF1Micro => "sentence-f1-micro",
            MetricArg::Rouge2 => "rouge2",
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    /// One prompt covering all documents of an instance.
    WholeSet,
    /// One prompt per document; selections are concatenated.
    PerDoc,
}

impl ModeArg {
    fn mode(self) -> Mode {
        match self {
            ModeArg::WholeSet => Mode::WholeSet,
            ModeArg::PerDoc => Mode::PerDocument,
        }
    }
}

#[derive(Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long, value_enum, default_value_t = MetricArg::TokenF1)]
    pub metric: MetricArg,
    /// Bootstrap iterations for confidence intervals (omit the flag to skip
    /// CIs; a bare `--bootstrap` uses 10000). Intervals always describe the
    /// mean of per-instance scores.
    #[arg(long, num_args = 0..=1, default_missing_value = "10000")]
    pub bootstrap: Option<usize>,
    /// Two-sided CI significance level.
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Write the full JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct GroundArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// JSONL of {"id", "outputs": [...], "doc": optional scope}.
    #[arg(long)]
    pub raw: PathBuf,
    /// Fuzzy-match budget as a fraction of output length (0 disables fuzzy
    /// matching).
    #[arg(long, default_value_t = 0.15)]
    pub ratio: f64,
    /// Absolute cap on the fuzzy-match budget.
    #[arg(long, default_value_t = 10)]
    pub cap: usize,
    /// Grounded predictions JSONL.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-output audit JSONL.
    #[arg(long)]
    pub audit: Option<PathBuf>,
}

#[derive(Args)]
pub struct InferArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Backend config file (TOML or JSON).
    #[arg(long)]
    pub backend: PathBuf,
    #[arg(long, value_enum, default_value_t = ModeArg::WholeSet)]
    pub mode: ModeArg,
    /// Custom prompt body file (defaults to the built-in selection prompt).
    #[arg(long)]
    pub template: Option<PathBuf>,
    /// Number of in-context examples to prepend.
    #[arg(long, default_value_t = 0)]
    pub icl: usize,
    /// Dataset supplying the in-context examples (first --icl instances).
    #[arg(long)]
    pub icl_from: Option<PathBuf>,
    #[arg(long, default_value_t = 0.15)]
    pub ratio: f64,
    #[arg(long, default_value_t = 10)]
    pub cap: usize,
    /// Predictions JSONL.
    #[arg(long)]
    pub out: PathBuf,
    /// Full per-instance run log JSONL (raw responses, warnings, errors).
    #[arg(long)]
    pub runs: Option<PathBuf>,
}

#[derive(Args)]
pub struct CompareModesArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long)]
    pub backend: PathBuf,
    #[arg(long)]
    pub template: Option<PathBuf>,
    #[arg(long, default_value_t = 0.15)]
    pub ratio: f64,
    #[arg(long, default_value_t = 10)]
    pub cap: usize,
    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args)]
pub struct SynthesizeArgs {
    /// Document sets in the dataset schema (references may be empty).
    #[arg(long)]
    pub sets: PathBuf,
    /// Synthesis config file with annotator backends (TOML or JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Write the union-merged dataset here.
    #[arg(long)]
    pub out_union: Option<PathBuf>,
    /// Write the majority-merged dataset here.
    #[arg(long)]
    pub out_majority: Option<PathBuf>,
    /// Per-candidate audit JSONL.
    #[arg(long)]
    pub audit: Option<PathBuf>,
}

#[derive(Args)]
pub struct AgreementArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Predictions JSONL per annotator; pass at least twice.
    #[arg(long = "selections", action = clap::ArgAction::Append)]
    pub selections: Vec<PathBuf>,
}

#[derive(Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Write the JSON report here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Dispatches a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Evaluate(args) => cmd_evaluate(args, cli.seed),
        Command::Ground(args) => cmd_ground(args),
        Command::Infer(args) => cmd_infer(args, cli.strict),
        Command::CompareModes(args) => cmd_compare_modes(args),
        Command::Synthesize(args) => cmd_synthesize(args, cli.seed),
        Command::Agreement(args) => cmd_agreement(args),
        Command::Stats(args) => cmd_stats(args),
    }
}

fn policy(ratio: f64, cap: usize) -> GroundingPolicy {
    GroundingPolicy { ratio, cap }
}

/// Checks that record ids and dataset ids agree. With `exact`, every dataset
/// id must also be covered; otherwise records may cover a subset.
fn check_ids<'a>(
    instances: &[Instance],
    record_ids: impl Iterator<Item = &'a String>,
    what: &str,
    exact: bool,
) -> Result<()> {
    let dataset_ids: BTreeSet<&str> = instances.iter().map(|i| i.id.as_str()).collect();
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    let mut unknown: Vec<&str> = Vec::new();
    let mut duplicated: Vec<&str> = Vec::new();
    for id in record_ids {
        if !dataset_ids.contains(id.as_str()) {
            unknown.push(id);
        }
        if !seen.insert(id) {
            duplicated.push(id);
        }
    }
    let mut problems = Vec::new();
    if !unknown.is_empty() {
        problems.push(format!("{what} ids not in dataset: {}", unknown.join(", ")));
    }
    if !duplicated.is_empty() {
        problems.push(format!("duplicate {what} ids: {}", duplicated.join(", ")));
    }
    if exact {
        let missing: Vec<&str> = dataset_ids
            .iter()
            .filter(|id| !seen.contains(**id))
            .copied()
            .collect();
        if !missing.is_empty() {
            problems.push(format!(
                "dataset ids without {what}: {}",
                missing.join(", ")
            ));
        }
    }
    if problems.is_empty() {
        Ok(())
    } else {
        bail!("{}", problems.join("; "))
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("report serializes");
    std::fs::write(path, text + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Derives a task-specific bootstrap seed from the root seed.
fn task_seed(seed: u64, task: &str) -> u64 {
    let mut bytes = seed.to_le_bytes().to_vec();
    bytes.extend_from_slice(task.as_bytes());
    fnv1a(&bytes)
}

fn cmd_evaluate(args: EvaluateArgs, seed: u64) -> Result<i32> {
    let instances = load_dataset(&args.dataset)?;
    let predictions = load_predictions(&args.predictions)?;
    check_ids(
        &instances,
        predictions.iter().map(|p| &p.id),
        "prediction",
        true,
    )?;
    let by_id: BTreeMap<&str, &Prediction> = predictions
        .iter()
        .map(|p| (p.id.as_str(), p))
        .collect();

    // Group by task, preserving dataset order within each task.
    let mut tasks: BTreeMap<String, (Vec<Instance>, Vec<Selection>)> = BTreeMap::new();
    for instance in &instances {
        let prediction = by_id[instance.id.as_str()];
        let selection = prediction
            .selection()
            .with_context(|| format!("prediction {}", prediction.id))?;
        let entry = tasks.entry(instance.task.clone()).or_default();
        entry.0.push(instance.clone());
        entry.1.push(selection);
    }

    let metric = args.metric.metric();
    let mut per_task: BTreeMap<String, EvalReport> = BTreeMap::new();
    let mut task_scores: Vec<TaskScores> = Vec::new();
    for (task, (task_instances, task_predictions)) in &tasks {
        let mut eval = evaluate_task(task_predictions, task_instances, metric)
            .with_context(|| format!("task {task}"))?;
        let scores: Vec<f64> = eval.per_instance.iter().map(|s| s.score.f1).collect();
        if let Some(iterations) = args.bootstrap {
            let single = vec![TaskScores {
                task: task.clone(),
                scores: scores.clone(),
            }];
            let (low, high) = bootstrap_ci(&single, iterations, args.alpha, task_seed(seed, task));
            eval.ci = Some(ConfidenceInterval {
                low,
                high,
                alpha: args.alpha,
            });
        }
        task_scores.push(TaskScores {
            task: task.clone(),
            scores,
        });
        per_task.insert(task.clone(), eval);
    }
    let mut benchmark = aggregate_benchmark(per_task)?;
    if let Some(iterations) = args.bootstrap {
        let (low, high) = bootstrap_ci(&task_scores, iterations, args.alpha, seed);
        benchmark.overall_ci = Some(ConfidenceInterval {
            low,
            high,
            alpha: args.alpha,
        });
    }

    print!("{}", report::benchmark_table(&benchmark));
    if let Some(out) = &args.out {
        let config = json!({
            "command": "evaluate",
            "dataset": args.dataset.display().to_string(),
            "predictions": args.predictions.display().to_string(),
            "metric": args.metric.name(),
            "bootstrap": args.bootstrap,
            "alpha": args.alpha,
            "seed": seed,
        });
        write_json(out, &report::with_config(config, report::benchmark_json(&benchmark)))?;
    }
    Ok(0)
}

#[derive(Serialize)]
struct GroundAuditRow {
    id: String,
    output: String,
    outcome: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    distance: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    doc: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    start: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    end: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<&'static str>,
}

fn cmd_ground(args: GroundArgs) -> Result<i32> {
    let instances = load_dataset(&args.dataset)?;
    let raw = load_raw_selections(&args.raw)?;
    check_ids(&instances, raw.iter().map(|r| &r.id), "selection", false)?;
    let by_id: BTreeMap<&str, &Instance> =
        instances.iter().map(|i| (i.id.as_str(), i)).collect();
    let policy = policy(args.ratio, args.cap);

    let mut predictions = Vec::with_capacity(raw.len());
    let mut audit_rows = Vec::new();
    for record in &raw {
        let instance = by_id[record.id.as_str()];
        let (selection, results) =
            ground_selection(&record.outputs, instance, record.doc, &policy)
                .with_context(|| format!("grounding {}", record.id))?;
        let mut prediction = Prediction::from_selection(&record.id, "ground", &selection);
        for (output, result) in record.outputs.iter().zip(&results) {
            let (outcome, distance, reason) = match result.outcome {
                GroundingOutcome::Exact => ("exact", Some(0), None),
                GroundingOutcome::Fuzzy(d) => ("fuzzy", Some(d), None),
                GroundingOutcome::Discarded(DiscardReason::Empty) => {
                    ("discarded", None, Some("empty output"))
                }
                GroundingOutcome::Discarded(DiscardReason::NoMatch) => {
                    ("discarded", None, Some("no match within distance threshold"))
                }
            };
            if result.is_discarded() {
                prediction.discarded.push(output.clone());
            }
            audit_rows.push(GroundAuditRow {
                id: record.id.clone(),
                output: output.clone(),
                outcome,
                distance,
                doc: result.span.map(|s| s.doc),
                start: result.span.map(|s| s.start),
                end: result.span.map(|s| s.end),
                reason,
            });
        }
        predictions.push(prediction);
    }

    save_predictions(&predictions, &args.out)?;
    if let Some(audit) = &args.audit {
        save_jsonl(&audit_rows, audit)?;
    }
    log::info!(
        "grounded {} outputs across {} records",
        audit_rows.len(),
        predictions.len()
    );
    Ok(0)
}

#[derive(Serialize)]
struct RunRow {
    id: String,
    mode: String,
    raw_responses: Vec<String>,
    outputs: Vec<String>,
    warnings: Vec<String>,
    invalid_format: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn load_template(template: Option<&PathBuf>, icl: usize, icl_from: Option<&PathBuf>) -> Result<PromptTemplate> {
    let mut template = match template {
        Some(path) => PromptTemplate::from_file(path)?,
        None => PromptTemplate::default(),
    };
    if icl > 0 {
        let path = icl_from
            .context("--icl requires --icl-from to supply example instances")?;
        let examples = load_dataset(path)?;
        if examples.len() < icl {
            bail!(
                "{} has {} instances but --icl {} were requested",
                path.display(),
                examples.len(),
                icl
            );
        }
        template.icl = icl_examples_from(&examples[..icl]);
    }
    Ok(template)
}

fn cmd_infer(args: InferArgs, strict: bool) -> Result<i32> {
    let instances = load_dataset(&args.dataset)?;
    let backend_config = load_backend_config(&args.backend)?;
    let backend = build_backend(&backend_config)?;
    let template = load_template(args.template.as_ref(), args.icl, args.icl_from.as_ref())?;
    log::info!("prompt template fingerprint: {}", template.fingerprint());

    let options = InferOptions {
        mode: args.mode.mode(),
        policy: policy(args.ratio, args.cap),
        retries: backend_config.retries,
        max_input_tokens: backend_config.max_input_tokens,
    };
    let runs = run_dataset(
        &instances,
        &template,
        backend.as_ref(),
        &options,
        backend_config.parallelism,
    );

    let mut predictions = Vec::with_capacity(instances.len());
    let mut run_rows = Vec::with_capacity(instances.len());
    let mut failures = 0usize;
    for (instance, run) in instances.iter().zip(runs) {
        match run {
            Ok(run) => {
                let mut prediction =
                    Prediction::from_selection(&run.id, run.mode.as_str(), &run.selection);
                prediction.discarded = run.discarded.clone();
                prediction.invalid_format = run.invalid_format;
                predictions.push(prediction);
                run_rows.push(RunRow {
                    id: run.id,
                    mode: run.mode.as_str().to_string(),
                    raw_responses: run.raw_responses,
                    outputs: run.outputs,
                    warnings: run.warnings,
                    invalid_format: run.invalid_format,
                    error: None,
                });
            }
            Err(e) => {
                failures += 1;
                log::error!("{e}");
                predictions.push(Prediction {
                    id: instance.id.clone(),
                    mode: options.mode.as_str().to_string(),
                    spans: Vec::new(),
                    discarded: Vec::new(),
                    invalid_format: true,
                });
                run_rows.push(RunRow {
                    id: instance.id.clone(),
                    mode: options.mode.as_str().to_string(),
                    raw_responses: Vec::new(),
                    outputs: Vec::new(),
                    warnings: Vec::new(),
                    invalid_format: true,
                    error: Some(e.to_string()),
                });
            }
        }
    }

    save_predictions(&predictions, &args.out)?;
    if let Some(runs_path) = &args.runs {
        save_jsonl(&run_rows, runs_path)?;
    }
    if failures > 0 {
        log::warn!("{failures} instance(s) failed; see the runs log");
        if strict {
            return Ok(1);
        }
    }
    Ok(0)
}

fn cmd_compare_modes(args: CompareModesArgs) -> Result<i32> {
    let instances = load_dataset(&args.dataset)?;
    let backend_config = load_backend_config(&args.backend)?;
    let backend = build_backend(&backend_config)?;
    let template = load_template(args.template.as_ref(), 0, None)?;
    let options = InferOptions {
        mode: Mode::WholeSet,
        policy: policy(args.ratio, args.cap),
        retries: backend_config.retries,
        max_input_tokens: backend_config.max_input_tokens,
    };
    let report = compare_modes(
        &instances,
        &template,
        backend.as_ref(),
        &options,
        backend_config.parallelism,
    )?;
    print!("{}", report::compare_table(&report));
    if let Some(out) = &args.out {
        let config = json!({
            "command": "compare-modes",
            "dataset": args.dataset.display().to_string(),
            "backend": args.backend.display().to_string(),
            "policy": { "ratio": args.ratio, "cap": args.cap },
            "template_fingerprint": template.fingerprint(),
        });
        let results = serde_json::to_value(&report).expect("report serializes");
        write_json(out, &report::with_config(config, results))?;
    }
    Ok(0)
}

#[derive(Serialize)]
struct SynthAnnotatorAudit {
    #[serde(skip_serializing_if = "Option::is_none")]
    outputs: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    spans: Option<Vec<PredictionSpan>>,
}

#[derive(Serialize)]
struct SynthAuditRow {
    set: String,
    instruction_index: usize,
    instruction: String,
    empty_target: bool,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    reason: Option<String>,
    warnings: Vec<String>,
    raw_responses: Vec<String>,
    annotators: Vec<SynthAnnotatorAudit>,
    rejected: Vec<serde_json::Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    merged: Option<Vec<PredictionSpan>>,
}

fn selection_spans(selection: &Selection) -> Vec<PredictionSpan> {
    selection
        .iter()
        .map(|s| PredictionSpan {
            doc: s.doc,
            start: s.start,
            end: s.end,
        })
        .collect()
}

fn synth_audit_row(record: &SynthesisRecord) -> SynthAuditRow {
    let (status, reason) = match &record.status {
        crate::synthesis::RecordStatus::Valid => ("valid", None),
        crate::synthesis::RecordStatus::Discarded { reason } => {
            ("discarded", Some(reason.clone()))
        }
    };
    SynthAuditRow {
        set: record.set_id.clone(),
        instruction_index: record.instruction_index,
        instruction: record.instruction.clone(),
        empty_target: record.empty_target,
        status,
        reason,
        warnings: record.warnings.clone(),
        raw_responses: record.annotator_raw.clone(),
        annotators: record
            .annotator_outputs
            .iter()
            .zip(
                record
                    .annotator_selections
                    .iter()
                    .chain(std::iter::repeat(&None)),
            )
            .map(|(outputs, selection)| SynthAnnotatorAudit {
                outputs: outputs.clone(),
                spans: selection.as_ref().map(selection_spans),
            })
            .collect(),
        rejected: record
            .rejected
            .iter()
            .map(|r| json!({ "annotator": r.annotator, "text": r.text }))
            .collect(),
        merged: record.merged.as_ref().map(selection_spans),
    }
}

fn cmd_synthesize(args: SynthesizeArgs, seed: u64) -> Result<i32> {
    if args.out_union.is_none() && args.out_majority.is_none() {
        bail!("pass --out-union and/or --out-majority to write the synthesized dataset");
    }
    let sets = load_dataset(&args.sets)?;
    let file_config = load_synthesis_config(&args.config)?;
    let (config, backend_configs) = file_config.into_parts(seed);
    let mut annotators = Vec::with_capacity(backend_configs.len());
    for backend_config in &backend_configs {
        annotators.push(build_backend(backend_config)?);
    }

    let output = run_pipeline(&sets, &annotators, &config)?;
    let union = match config.merge {
        MergeStrategy::Union => output.instances.clone(),
        _ => instances_from_records(&output.records, &sets, MergeStrategy::Union)?,
    };
    let majority = match config.merge {
        MergeStrategy::Majority { .. } => output.instances.clone(),
        _ => instances_from_records(
            &output.records,
            &sets,
            MergeStrategy::Majority { threshold: None },
        )?,
    };

    if let Some(path) = &args.out_union {
        save_dataset(&union, path)?;
    }
    if let Some(path) = &args.out_majority {
        save_dataset(&majority, path)?;
    }
    if let Some(path) = &args.audit {
        let rows: Vec<SynthAuditRow> = output.records.iter().map(synth_audit_row).collect();
        save_jsonl(&rows, path)?;
    }

    let valid = output.records.iter().filter(|r| r.status.is_valid()).count();
    println!(
        "sets: {}  candidates: {}  valid: {}  discarded: {}  empty-target sets: {}",
        output.sets,
        output.records.len(),
        valid,
        output.records.len() - valid,
        output.empty_target_sets.len(),
    );
    Ok(0)
}

fn cmd_agreement(args: AgreementArgs) -> Result<i32> {
    if args.selections.len() < 2 {
        bail!("agreement needs at least two --selections files");
    }
    let instances = load_dataset(&args.dataset)?;
    let mut annotations: Vec<Vec<Selection>> = Vec::with_capacity(args.selections.len());
    for path in &args.selections {
        let predictions = load_predictions(path)?;
        check_ids(
            &instances,
            predictions.iter().map(|p| &p.id),
            "selection",
            true,
        )
        .with_context(|| path.display().to_string())?;
        let by_id: BTreeMap<&str, &Prediction> = predictions
            .iter()
            .map(|p| (p.id.as_str(), p))
            .collect();
        let aligned = instances
            .iter()
            .map(|instance| by_id[instance.id.as_str()].selection())
            .collect::<Result<Vec<_>, _>>()
            .with_context(|| path.display().to_string())?;
        annotations.push(aligned);
    }
    let score = agreement(&instances, &annotations)?;
    println!(
        "pairwise token F1 agreement: {score:.4} (instances: {}, annotators: {})",
        instances.len(),
        annotations.len()
    );
    Ok(0)
}

fn cmd_stats(args: StatsArgs) -> Result<i32> {
    let instances = load_dataset(&args.dataset)?;
    let stats = dataset_stats(&instances)?;
    print!("{}", report::stats_table(&stats));
    if let Some(out) = &args.out {
        let config = json!({
            "command": "stats",
            "dataset": args.dataset.display().to_string(),
        });
        let results = serde_json::to_value(&stats).expect("stats serialize");
        write_json(out, &report::with_config(config, results))?;
    }
    Ok(0)
}
