//! Running instances against a backend and grounding the answers.
//!
//! Two modes: `whole-set` sends one prompt covering every document of the
//! instance; `per-doc` prompts once per document and concatenates the
//! grounded selections. Responses that fail to parse are retried once with
//! the identical prompt before the call is marked invalid.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use igcs_core::grounding::{ground_selection, GroundingPolicy, GroundingResult};
use igcs_core::metrics::{multi_ref_score, Metric};
use igcs_core::tokenize::{span_to_tokens, tokenize};
use igcs_core::types::{CoreError, Instance, Selection, Span};

use crate::backend::{complete_with_retry, Backend, BackendError, Message};
use crate::prompt::{parse_output, render_prompt, PromptError, PromptTemplate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Mode {
    WholeSet,
    PerDocument,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::WholeSet => "whole-set",
            Mode::PerDocument => "per-doc",
        }
    }
}

impl core::fmt::Display for Mode {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("instance {id}: backend failure: {source}")]
    Backend { id: String, source: BackendError },
    #[error("instance {id}: {source}")]
    Prompt { id: String, source: PromptError },
    #[error(transparent)]
    Core(#[from] CoreError),
}

#[derive(Debug, Clone)]
pub struct InferOptions {
    pub mode: Mode,
    pub policy: GroundingPolicy,
    /// Extra attempts after transient backend failures.
    pub retries: usize,
    /// Whole-set prompt budget in tokens; over-budget prompts drop trailing
    /// documents one at a time.
    pub max_input_tokens: Option<usize>,
}

impl Default for InferOptions {
    fn default() -> Self {
        InferOptions {
            mode: Mode::WholeSet,
            policy: GroundingPolicy::default(),
            retries: 2,
            max_input_tokens: None,
        }
    }
}

/// Everything one instance produced: raw responses, parsed output strings,
/// the grounded selection, and the per-string grounding audit.
#[derive(Debug)]
pub struct InferenceRun {
    pub id: String,
    pub mode: Mode,
    /// One response per backend call, in call order (retries keep the last).
    pub raw_responses: Vec<String>,
    /// Parsed output strings across all calls, in order.
    pub outputs: Vec<String>,
    pub selection: Selection,
    /// Grounding audit, parallel to `outputs`.
    pub grounding: Vec<GroundingResult>,
    /// Output strings that failed grounding.
    pub discarded: Vec<String>,
    /// Whether any call's response had no parseable array of strings.
    pub invalid_format: bool,
    pub warnings: Vec<String>,
}

/// Runs one instance. In whole-set mode the backend is called once (plus at
/// most one verbatim retry on a parse failure); in per-document mode it is
/// called exactly once per document, and each call's outputs are grounded
/// only within the prompted document.
pub fn run_instance(
    instance: &Instance,
    template: &PromptTemplate,
    backend: &dyn Backend,
    options: &InferOptions,
) -> Result<InferenceRun, InferenceError> {
    let mut run = InferenceRun {
        id: instance.id.clone(),
        mode: options.mode,
        raw_responses: Vec::new(),
        outputs: Vec::new(),
        selection: Selection::empty(),
        grounding: Vec::new(),
        discarded: Vec::new(),
        invalid_format: false,
        warnings: Vec::new(),
    };

    let mut spans: Vec<Span> = Vec::new();
    match options.mode {
        Mode::WholeSet => {
            let subset = truncate_documents(instance, template, options, &mut run.warnings)?;
            let prompt = render_prompt(instance, template, subset.as_deref())
                .map_err(|source| InferenceError::Prompt {
                    id: instance.id.clone(),
                    source,
                })?;
            let outputs = call_and_parse(backend, &instance.id, &prompt, options, &mut run)?;
            let (selection, results) =
                ground_selection(&outputs, instance, None, &options.policy)?;
            record_grounding(&mut run, outputs, results);
            spans.extend(selection.iter());
        }
        Mode::PerDocument => {
            for doc in 0..instance.documents.len() {
                let key = format!("{}::{}", instance.id, instance.documents[doc].id);
                let prompt = render_prompt(instance, template, Some(&[doc])).map_err(
                    |source| InferenceError::Prompt {
                        id: instance.id.clone(),
                        source,
                    },
                )?;
                let outputs = call_and_parse(backend, &key, &prompt, options, &mut run)?;
                let (selection, results) =
                    ground_selection(&outputs, instance, Some(doc), &options.policy)?;
                record_grounding(&mut run, outputs, results);
                spans.extend(selection.iter());
            }
        }
    }

    run.selection = if spans.is_empty() {
        Selection::empty()
    } else {
        Selection::new(spans)?
    };
    Ok(run)
}

/// Sends one prompt, parses the response, and retries the identical prompt
/// once if parsing fails. Returns the parsed output strings (empty when both
/// attempts are unparseable, with `invalid_format` set).
fn call_and_parse(
    backend: &dyn Backend,
    key: &str,
    prompt: &str,
    options: &InferOptions,
    run: &mut InferenceRun,
) -> Result<Vec<String>, InferenceError> {
    let messages = [Message::user(prompt)];
    for attempt in 0..2 {
        let response = complete_with_retry(backend, options.retries, key, &messages).map_err(
            |source| InferenceError::Backend {
                id: run.id.clone(),
                source,
            },
        )?;
        let parsed = parse_output(&response);
        if attempt == 0 {
            run.raw_responses.push(response);
        } else {
            *run.raw_responses.last_mut().expect("pushed above") = response;
        }
        match parsed {
            Ok(outputs) => return Ok(outputs),
            Err(_) if attempt == 0 => {
                log::debug!("{key}: unparseable response, retrying once");
            }
            Err(_) => break,
        }
    }
    run.invalid_format = true;
    Ok(Vec::new())
}

fn record_grounding(run: &mut InferenceRun, outputs: Vec<String>, results: Vec<GroundingResult>) {
    for (output, result) in outputs.iter().zip(&results) {
        if result.is_discarded() {
            run.discarded.push(output.clone());
        }
    }
    run.outputs.extend(outputs);
    run.grounding.extend(results);
}

/// Picks the whole-set document subset under the token budget, dropping
/// trailing documents until the rendered prompt fits (always keeping at
/// least one). Returns `None` when all documents are included.
fn truncate_documents(
    instance: &Instance,
    template: &PromptTemplate,
    options: &InferOptions,
    warnings: &mut Vec<String>,
) -> Result<Option<Vec<usize>>, InferenceError> {
    let Some(budget) = options.max_input_tokens else {
        return Ok(None);
    };
    let mut keep = instance.documents.len();
    while keep > 1 {
        let subset: Vec<usize> = (0..keep).collect();
        let prompt = render_prompt(instance, template, Some(&subset)).map_err(|source| {
            InferenceError::Prompt {
                id: instance.id.clone(),
                source,
            }
        })?;
        if tokenize(&prompt).len() <= budget {
            break;
        }
        keep -= 1;
    }
    if keep == instance.documents.len() {
        Ok(None)
    } else {
        warnings.push(format!(
            "prompt over {budget} tokens: dropped {} trailing document(s)",
            instance.documents.len() - keep
        ));
        Ok(Some((0..keep).collect()))
    }
}

/// Runs a whole dataset on a worker pool, preserving instance order.
pub fn run_dataset(
    instances: &[Instance],
    template: &PromptTemplate,
    backend: &dyn Backend,
    options: &InferOptions,
    parallelism: usize,
) -> Vec<Result<InferenceRun, InferenceError>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .expect("worker pool");
    pool.install(|| {
        instances
            .par_iter()
            .map(|instance| run_instance(instance, template, backend, options))
            .collect()
    })
}

/// One row of the whole-set versus per-document comparison.
#[derive(Debug, Clone, Serialize)]
pub struct ModeComparison {
    pub task: String,
    pub n: usize,
    /// Mean token F1 in whole-set mode.
    pub score: f64,
    /// Per-document mean score minus whole-set mean score.
    pub delta_score: f64,
    /// Mean predicted-selection token count in whole-set mode.
    pub sel_tokens: f64,
    /// Per-document mean selection tokens minus whole-set.
    pub delta_sel_tokens: f64,
}

#[derive(Debug, Serialize)]
pub struct CompareReport {
    pub tasks: Vec<ModeComparison>,
    pub overall: ModeComparison,
}

/// Runs every instance in both modes and reports, per task, the whole-set
/// score and how switching to per-document prompting moves the score and
/// the amount of selected content.
pub fn compare_modes(
    instances: &[Instance],
    template: &PromptTemplate,
    backend: &dyn Backend,
    options: &InferOptions,
    parallelism: usize,
) -> Result<CompareReport, InferenceError> {
    if instances.is_empty() {
        return Err(CoreError::EmptyInput.into());
    }
    let whole = InferOptions {
        mode: Mode::WholeSet,
        ..options.clone()
    };
    let per_doc = InferOptions {
        mode: Mode::PerDocument,
        ..options.clone()
    };
    let whole_runs = run_dataset(instances, template, backend, &whole, parallelism);
    let per_doc_runs = run_dataset(instances, template, backend, &per_doc, parallelism);

    struct Accum {
        n: usize,
        whole_score: f64,
        per_doc_score: f64,
        whole_tokens: f64,
        per_doc_tokens: f64,
    }
    let mut tasks: std::collections::BTreeMap<String, Accum> = std::collections::BTreeMap::new();
    for ((instance, whole_run), per_doc_run) in
        instances.iter().zip(whole_runs).zip(per_doc_runs)
    {
        let whole_run = whole_run?;
        let per_doc_run = per_doc_run?;
        let (whole_triple, _) = multi_ref_score(&whole_run.selection, instance, Metric::TokenF1)?;
        let (per_doc_triple, _) =
            multi_ref_score(&per_doc_run.selection, instance, Metric::TokenF1)?;
        let whole_tokens = span_to_tokens(instance, &whole_run.selection)?.len();
        let per_doc_tokens = span_to_tokens(instance, &per_doc_run.selection)?.len();
        let entry = tasks.entry(instance.task.clone()).or_insert(Accum {
            n: 0,
            whole_score: 0.0,
            per_doc_score: 0.0,
            whole_tokens: 0.0,
            per_doc_tokens: 0.0,
        });
        entry.n += 1;
        entry.whole_score += whole_triple.f1;
        entry.per_doc_score += per_doc_triple.f1;
        entry.whole_tokens += whole_tokens as f64;
        entry.per_doc_tokens += per_doc_tokens as f64;
    }

    let rows: Vec<ModeComparison> = tasks
        .into_iter()
        .map(|(task, a)| {
            let n = a.n as f64;
            ModeComparison {
                task,
                n: a.n,
                score: a.whole_score / n,
                delta_score: (a.per_doc_score - a.whole_score) / n,
                sel_tokens: a.whole_tokens / n,
                delta_sel_tokens: (a.per_doc_tokens - a.whole_tokens) / n,
            }
        })
        .collect();
    let k = rows.len() as f64;
    let overall = ModeComparison {
        task: "overall".to_string(),
        n: rows.iter().map(|r| r.n).sum(),
        score: rows.iter().map(|r| r.score).sum::<f64>() / k,
        delta_score: rows.iter().map(|r| r.delta_score).sum::<f64>() / k,
        sel_tokens: rows.iter().map(|r| r.sel_tokens).sum::<f64>() / k,
        delta_sel_tokens: rows.iter().map(|r| r.delta_sel_tokens).sum::<f64>() / k,
    };
    Ok(CompareReport {
        tasks: rows,
        overall,
    })
}
