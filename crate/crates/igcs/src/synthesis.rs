//! Synthesizing instruction-guided selection datasets from raw document
//! sets.
//!
//! For each document set, one backend writes a fixed number of selection
//! instructions (a small fraction of sets is steered toward instructions
//! with no matching content); every annotator backend then answers a single
//! prompt covering all instructions of the set; finally the grounded
//! per-annotator selections are merged token-wise (union or majority) into
//! one reference per instruction. Candidates that fail along the way are
//! kept as discarded records, so every run accounts for exactly
//! `sets × instructions_per_set` candidates.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use igcs_core::grounding::{ground_selection, GroundingPolicy};
use igcs_core::rng::stream_rng;
use igcs_core::tokenize::InstanceTokens;
use igcs_core::types::{CoreError, Instance, Selection, TokenIndexSet};

use crate::backend::{complete_with_retry, Backend, BackendConfig, Message};
use crate::prompt::{fill_named, parse_nested, NestedEntries};

const INSTRUCTION_GEN_SYSTEM: &str = include_str!("../templates/instruction_gen_system.txt");
const INSTRUCTION_GEN_USER: &str = include_str!("../templates/instruction_gen_user.txt");
const INSTRUCTION_GEN_USER_EMPTY: &str =
    include_str!("../templates/instruction_gen_user_empty.txt");
const ANNOTATION_SYSTEM: &str = include_str!("../templates/selection_annotation_system.txt");
const ANNOTATION_USER: &str = include_str!("../templates/selection_annotation_user.txt");
const ONE_STEP_USER: &str = include_str!("../templates/one_step_user.txt");
const ONE_STEP_USER_EMPTY: &str = include_str!("../templates/one_step_user_empty.txt");

#[derive(Debug, Error)]
pub enum SynthesisError {
    #[error("at least one annotator backend is required")]
    NoAnnotators,
    #[error("invalid synthesis configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {message}")]
    Config { path: String, message: String },
}

/// How per-annotator token sets become one reference selection.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MergeStrategy {
    /// Every token any annotator selected.
    #[default]
    Union,
    /// Tokens selected by at least `threshold` annotators
    /// (default: half of them, rounded up).
    Majority { threshold: Option<usize> },
}

impl MergeStrategy {
    pub fn as_str(&self) -> &'static str {
        match self {
            MergeStrategy::Union => "union",
            MergeStrategy::Majority { .. } => "majority",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthesisConfig {
    pub instructions_per_set: usize,
    /// Fraction of sets steered toward no-matching-content instructions.
    pub empty_target_fraction: f64,
    pub merge: MergeStrategy,
    /// Generate instructions and selections in a single prompt to the first
    /// backend instead of the two-step flow.
    pub one_step: bool,
    pub policy: GroundingPolicy,
    /// Extra attempts after transient backend failures.
    pub retries: usize,
    pub seed: u64,
}

impl Default for SynthesisConfig {
    fn default() -> Self {
        SynthesisConfig {
            instructions_per_set: 5,
            empty_target_fraction: 0.05,
            merge: MergeStrategy::Union,
            one_step: false,
            policy: GroundingPolicy::default(),
            retries: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecordStatus {
    Valid,
    Discarded { reason: String },
}

impl RecordStatus {
    pub fn is_valid(&self) -> bool {
        matches!(self, RecordStatus::Valid)
    }
}

/// An output string an annotator produced that grounding rejected. The
/// instruction itself stays valid; only the string is dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedOutput {
    pub annotator: usize,
    pub text: String,
}

/// Full audit trail for one candidate (set, instruction) pair.
#[derive(Debug)]
pub struct SynthesisRecord {
    pub set_id: String,
    pub set_index: usize,
    /// Position within the set's instruction list, 0-based.
    pub instruction_index: usize,
    /// Empty when instruction generation failed for the whole set.
    pub instruction: String,
    pub empty_target: bool,
    pub status: RecordStatus,
    pub warnings: Vec<String>,
    /// Raw annotation responses, one per annotator.
    pub annotator_raw: Vec<String>,
    /// Parsed output strings per annotator; `None` marks an entry that was
    /// missing or not a string list.
    pub annotator_outputs: Vec<Option<Vec<String>>>,
    /// Grounded selection per annotator, aligned with `annotator_outputs`.
    pub annotator_selections: Vec<Option<Selection>>,
    pub rejected: Vec<RejectedOutput>,
    /// Merged reference under the configured strategy; valid records only.
    pub merged: Option<Selection>,
}

#[derive(Debug)]
pub struct SynthesisOutput {
    /// Exactly `sets × instructions_per_set` records, in set order.
    pub records: Vec<SynthesisRecord>,
    /// One instance per valid record, merged under the configured strategy.
    pub instances: Vec<Instance>,
    pub sets: usize,
    /// Ids of sets designated for no-matching-content instructions.
    pub empty_target_sets: Vec<String>,
}

/// Domain wording for the synthesis prompts: code corpora speak of source
/// files, everything else of documents.
struct Wording {
    firm: &'static str,
    unit: &'static str,
    rewrite: &'static str,
    source: &'static str,
    source_phrase: &'static str,
    verbatim_unit: &'static str,
    source_header: &'static str,
}

const CODE_WORDING: Wording = Wording {
    firm: "software",
    unit: "code",
    rewrite: "code",
    source: "file",
    source_phrase: "source file",
    verbatim_unit: "code",
    source_header: "Source File",
};

const TEXT_WORDING: Wording = Wording {
    firm: "publishing",
    unit: "content",
    rewrite: "text",
    source: "document",
    source_phrase: "document",
    verbatim_unit: "text phrases",
    source_header: "Document",
};

fn wording_for(set: &Instance) -> &'static Wording {
    if set.metadata.get("domain").map(String::as_str) == Some("code") {
        &CODE_WORDING
    } else {
        &TEXT_WORDING
    }
}

fn source_blocks(wording: &Wording, set: &Instance) -> String {
    set.documents
        .iter()
        .enumerate()
        .map(|(k, d)| format!("{} #{k}:\n\n{}", wording.source_header, d.text))
        .collect::<Vec<_>>()
        .join("\n\n")
}

fn synthesis_slots(
    wording: &Wording,
    n: usize,
    set: &Instance,
) -> BTreeMap<&'static str, String> {
    let mut slots = BTreeMap::new();
    slots.insert("firm", wording.firm.to_string());
    slots.insert("unit", wording.unit.to_string());
    slots.insert("rewrite", wording.rewrite.to_string());
    slots.insert("source", wording.source.to_string());
    slots.insert("source_phrase", wording.source_phrase.to_string());
    slots.insert("verbatim_unit", wording.verbatim_unit.to_string());
    slots.insert("n", n.to_string());
    slots.insert("documents", source_blocks(wording, set));
    slots
}

fn render_bundled(template: &str, slots: &BTreeMap<&'static str, String>) -> String {
    fill_named(template.trim_end_matches('\n'), slots).expect("bundled template renders")
}

/// Step-1 prompt: instructions for the set, standard or empty-target
/// variant.
pub fn render_instruction_gen(set: &Instance, n: usize, empty_target: bool) -> (String, String) {
    let wording = wording_for(set);
    let slots = synthesis_slots(wording, n, set);
    let template = if empty_target {
        INSTRUCTION_GEN_USER_EMPTY
    } else {
        INSTRUCTION_GEN_USER
    };
    (
        render_bundled(INSTRUCTION_GEN_SYSTEM, &slots),
        render_bundled(template, &slots),
    )
}

/// Step-2 prompt: one prompt covering every instruction of the set.
pub fn render_annotation(set: &Instance, instructions: &[String]) -> (String, String) {
    let wording = wording_for(set);
    let mut slots = synthesis_slots(wording, instructions.len(), set);
    let numbered = instructions
        .iter()
        .enumerate()
        .map(|(j, i)| format!("{}. {i}", j + 1))
        .collect::<Vec<_>>()
        .join("\n");
    slots.insert("instructions", numbered);
    (
        render_bundled(ANNOTATION_SYSTEM, &slots),
        render_bundled(ANNOTATION_USER, &slots),
    )
}

/// Combined instruction-and-annotation prompt for one-step synthesis.
pub fn render_one_step(set: &Instance, n: usize, empty_target: bool) -> (String, String) {
    let wording = wording_for(set);
    let slots = synthesis_slots(wording, n, set);
    let template = if empty_target {
        ONE_STEP_USER_EMPTY
    } else {
        ONE_STEP_USER
    };
    (
        render_bundled(INSTRUCTION_GEN_SYSTEM, &slots),
        render_bundled(template, &slots),
    )
}

/// Extracts a numbered instruction list ("1." or "1)" markers), requiring
/// exactly `expected` items. Non-list lines are ignored.
pub fn parse_instruction_list(response: &str, expected: usize) -> Result<Vec<String>, String> {
    let mut items = Vec::new();
    for line in response.lines() {
        if let Some(rest) = strip_list_marker(line.trim()) {
            if !rest.is_empty() {
                items.push(rest.to_string());
            }
        }
    }
    if items.len() != expected {
        return Err(format!(
            "expected {expected} instructions, found {}",
            items.len()
        ));
    }
    Ok(items)
}

fn strip_list_marker(line: &str) -> Option<&str> {
    let digits = line.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits == 0 {
        return None;
    }
    let rest = &line[digits..];
    let rest = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')'))?;
    Some(rest.trim_start())
}

/// Merges per-annotator selections token-wise over the set's documents.
pub fn merge_selections(
    selections: &[Selection],
    set: &Instance,
    strategy: MergeStrategy,
) -> Result<Selection, CoreError> {
    let tokens = InstanceTokens::new(&set.documents);
    let mut counts: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for selection in selections {
        for token in tokens.span_to_tokens(selection)?.iter() {
            *counts.entry(token).or_insert(0) += 1;
        }
    }
    let needed = match strategy {
        MergeStrategy::Union => 1,
        MergeStrategy::Majority { threshold } => threshold
            .unwrap_or_else(|| selections.len().div_ceil(2))
            .max(1),
    };
    let kept: TokenIndexSet = counts
        .into_iter()
        .filter(|&(_, count)| count >= needed)
        .map(|(token, _)| token)
        .collect();
    tokens.tokens_to_spans(&kept)
}

/// Designates which set indices get empty-target instructions: exactly
/// `round(fraction × sets)` per corpus (the `corpus` metadata key),
/// sampled without replacement from a seed-derived stream.
pub fn designate_empty_targets(
    sets: &[Instance],
    fraction: f64,
    seed: u64,
) -> BTreeSet<usize> {
    let mut by_corpus: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (index, set) in sets.iter().enumerate() {
        let corpus = set.metadata.get("corpus").map(String::as_str).unwrap_or("");
        by_corpus.entry(corpus).or_default().push(index);
    }
    let mut chosen = BTreeSet::new();
    for (corpus, mut pool) in by_corpus {
        let count = ((fraction * pool.len() as f64).round() as usize).min(pool.len());
        let mut rng = stream_rng(seed, &format!("empty-target:{corpus}"), 0);
        for i in 0..count {
            let j = i + rng.random_range(0..pool.len() - i);
            pool.swap(i, j);
            chosen.insert(pool[i]);
        }
    }
    chosen
}

/// Runs the full synthesis pipeline. The first backend doubles as the
/// instruction generator; all backends annotate. Backend failures and
/// malformed responses become discarded records rather than errors, so the
/// output always accounts for every candidate.
pub fn run_pipeline(
    sets: &[Instance],
    annotators: &[Box<dyn Backend>],
    config: &SynthesisConfig,
) -> Result<SynthesisOutput, SynthesisError> {
    if annotators.is_empty() {
        return Err(SynthesisError::NoAnnotators);
    }
    if config.instructions_per_set == 0 {
        return Err(SynthesisError::BadConfig(
            "instructions_per_set must be at least 1".to_string(),
        ));
    }
    if !(0.0..=1.0).contains(&config.empty_target_fraction) {
        return Err(SynthesisError::BadConfig(format!(
            "empty_target_fraction {} is not in [0, 1]",
            config.empty_target_fraction
        )));
    }
    if sets.is_empty() {
        return Err(SynthesisError::Core(CoreError::EmptyInput));
    }

    let empty_targets =
        designate_empty_targets(sets, config.empty_target_fraction, config.seed);
    let mut records = Vec::with_capacity(sets.len() * config.instructions_per_set);
    for (set_index, set) in sets.iter().enumerate() {
        let empty_target = empty_targets.contains(&set_index);
        let set_records = if config.one_step {
            synthesize_one_step(set, set_index, empty_target, annotators[0].as_ref(), config)
        } else {
            synthesize_two_step(set, set_index, empty_target, annotators, config)
        };
        debug_assert_eq!(set_records.len(), config.instructions_per_set);
        records.extend(set_records);
    }

    let mut instances = Vec::new();
    for record in &mut records {
        if !record.status.is_valid() {
            continue;
        }
        let set = &sets[record.set_index];
        let merged = merge_record(record, set, config.merge)?;
        record.merged = Some(merged.clone());
        instances.push(build_instance(set, record, merged));
    }

    Ok(SynthesisOutput {
        records,
        instances,
        sets: sets.len(),
        empty_target_sets: empty_targets
            .iter()
            .map(|&i| sets[i].id.clone())
            .collect(),
    })
}

/// Rebuilds the instance list from pipeline records under any merge
/// strategy, without rerunning backends.
pub fn instances_from_records(
    records: &[SynthesisRecord],
    sets: &[Instance],
    strategy: MergeStrategy,
) -> Result<Vec<Instance>, SynthesisError> {
    let mut instances = Vec::new();
    for record in records {
        if !record.status.is_valid() {
            continue;
        }
        let set = &sets[record.set_index];
        let merged = merge_record(record, set, strategy)?;
        instances.push(build_instance(set, record, merged));
    }
    Ok(instances)
}

fn merge_record(
    record: &SynthesisRecord,
    set: &Instance,
    strategy: MergeStrategy,
) -> Result<Selection, CoreError> {
    let selections: Vec<Selection> = record
        .annotator_selections
        .iter()
        .map(|s| s.clone().expect("valid record has all annotator selections"))
        .collect();
    merge_selections(&selections, set, strategy)
}

fn build_instance(set: &Instance, record: &SynthesisRecord, merged: Selection) -> Instance {
    let mut metadata = set.metadata.clone();
    metadata.insert("set".to_string(), set.id.clone());
    if record.empty_target {
        metadata.insert("empty_target".to_string(), "true".to_string());
    }
    Instance {
        id: format!("{}.{}", set.id, record.instruction_index),
        task: set.task.clone(),
        instruction: record.instruction.clone(),
        selection_type: set.selection_type.clone(),
        source_type: set.source_type.clone(),
        documents: set.documents.clone(),
        references: vec![merged],
        allow_empty: true,
        metadata,
    }
}

/// N discarded records for a set whose generation step failed outright.
fn discarded_set(
    set: &Instance,
    set_index: usize,
    empty_target: bool,
    n: usize,
    reason: &str,
    raw: Option<&str>,
) -> Vec<SynthesisRecord> {
    (0..n)
        .map(|j| SynthesisRecord {
            set_id: set.id.clone(),
            set_index,
            instruction_index: j,
            instruction: String::new(),
            empty_target,
            status: RecordStatus::Discarded {
                reason: reason.to_string(),
            },
            warnings: Vec::new(),
            annotator_raw: raw.iter().map(|r| r.to_string()).collect(),
            annotator_outputs: Vec::new(),
            annotator_selections: Vec::new(),
            rejected: Vec::new(),
            merged: None,
        })
        .collect()
}

fn synthesize_two_step(
    set: &Instance,
    set_index: usize,
    empty_target: bool,
    annotators: &[Box<dyn Backend>],
    config: &SynthesisConfig,
) -> Vec<SynthesisRecord> {
    let n = config.instructions_per_set;
    let (system, user) = render_instruction_gen(set, n, empty_target);
    let gen_key = format!("{}::instructions", set.id);
    let messages = [Message::system(system), Message::user(user)];
    let response = match complete_with_retry(
        annotators[0].as_ref(),
        config.retries,
        &gen_key,
        &messages,
    ) {
        Ok(response) => response,
        Err(e) => {
            return discarded_set(
                set,
                set_index,
                empty_target,
                n,
                &format!("instruction generation failed: {e}"),
                None,
            )
        }
    };
    let instructions = match parse_instruction_list(&response, n) {
        Ok(instructions) => instructions,
        Err(reason) => {
            return discarded_set(
                set,
                set_index,
                empty_target,
                n,
                &format!("instruction generation failed: {reason}"),
                Some(&response),
            )
        }
    };

    // One annotation prompt per backend, covering all instructions.
    let (system, user) = render_annotation(set, &instructions);
    let sel_key = format!("{}::selections", set.id);
    let messages = [Message::system(system), Message::user(user)];
    let mut raws: Vec<String> = Vec::with_capacity(annotators.len());
    let mut entry_lists: Vec<Option<NestedEntries>> = Vec::with_capacity(annotators.len());
    for annotator in annotators {
        match complete_with_retry(annotator.as_ref(), config.retries, &sel_key, &messages) {
            Ok(response) => {
                entry_lists.push(parse_nested(&response));
                raws.push(response);
            }
            Err(e) => {
                entry_lists.push(None);
                raws.push(format!("<backend error: {e}>"));
            }
        }
    }

    let prefix = format!("Select {}", wording_for(set).unit);
    instructions
        .into_iter()
        .enumerate()
        .map(|(j, instruction)| {
            let mut warnings = Vec::new();
            if !instruction.starts_with(&prefix) {
                warnings.push(format!("instruction does not start with \"{prefix}\""));
            }
            let annotator_outputs: Vec<Option<Vec<String>>> = entry_lists
                .iter()
                .map(|entries| entries.as_ref().and_then(|e| e.get(j).cloned().flatten()))
                .collect();
            let mut record = SynthesisRecord {
                set_id: set.id.clone(),
                set_index,
                instruction_index: j,
                instruction,
                empty_target,
                status: RecordStatus::Valid,
                warnings,
                annotator_raw: raws.clone(),
                annotator_outputs,
                annotator_selections: Vec::new(),
                rejected: Vec::new(),
                merged: None,
            };
            ground_annotations(&mut record, set, &config.policy);
            record
        })
        .collect()
}

fn synthesize_one_step(
    set: &Instance,
    set_index: usize,
    empty_target: bool,
    backend: &dyn Backend,
    config: &SynthesisConfig,
) -> Vec<SynthesisRecord> {
    let n = config.instructions_per_set;
    let (system, user) = render_one_step(set, n, empty_target);
    let key = format!("{}::one-step", set.id);
    let messages = [Message::system(system), Message::user(user)];
    let response = match complete_with_retry(backend, config.retries, &key, &messages) {
        Ok(response) => response,
        Err(e) => {
            return discarded_set(
                set,
                set_index,
                empty_target,
                n,
                &format!("one-step synthesis failed: {e}"),
                None,
            )
        }
    };
    let Some(entries) = parse_nested(&response) else {
        return discarded_set(
            set,
            set_index,
            empty_target,
            n,
            "one-step synthesis failed: no parseable nested list",
            Some(&response),
        );
    };

    let prefix = format!("Select {}", wording_for(set).unit);
    (0..n)
        .map(|j| {
            let entry = entries.get(j).cloned().flatten();
            let (instruction, outputs, status) = match entry {
                Some(list) if !list.is_empty() => {
                    (list[0].clone(), Some(list[1..].to_vec()), RecordStatus::Valid)
                }
                Some(_) => (
                    String::new(),
                    None,
                    RecordStatus::Discarded {
                        reason: "entry has no instruction text".to_string(),
                    },
                ),
                None => (
                    String::new(),
                    None,
                    RecordStatus::Discarded {
                        reason: "no parseable entry in response".to_string(),
                    },
                ),
            };
            let mut warnings = Vec::new();
            if status.is_valid() && !instruction.starts_with(&prefix) {
                warnings.push(format!("instruction does not start with \"{prefix}\""));
            }
            let mut record = SynthesisRecord {
                set_id: set.id.clone(),
                set_index,
                instruction_index: j,
                instruction,
                empty_target,
                status,
                warnings,
                annotator_raw: vec![response.clone()],
                annotator_outputs: vec![outputs],
                annotator_selections: Vec::new(),
                rejected: Vec::new(),
                merged: None,
            };
            ground_annotations(&mut record, set, &config.policy);
            record
        })
        .collect()
}

/// Grounds every annotator's outputs for one record. A missing or
/// unparseable entry from any annotator discards the instruction; output
/// strings that fail grounding are rejected individually while the
/// instruction stays valid.
fn ground_annotations(record: &mut SynthesisRecord, set: &Instance, policy: &GroundingPolicy) {
    if !record.status.is_valid() {
        return;
    }
    let mut selections = Vec::with_capacity(record.annotator_outputs.len());
    let mut reason: Option<String> = None;
    for (annotator, outputs) in record.annotator_outputs.iter().enumerate() {
        match outputs {
            None => {
                selections.push(None);
                reason.get_or_insert_with(|| {
                    format!("annotator {annotator} returned no parseable entry")
                });
            }
            Some(outputs) => match ground_selection(outputs, set, None, policy) {
                Ok((selection, results)) => {
                    for (output, result) in outputs.iter().zip(&results) {
                        if result.is_discarded() {
                            record.rejected.push(RejectedOutput {
                                annotator,
                                text: output.clone(),
                            });
                        }
                    }
                    selections.push(Some(selection));
                }
                Err(e) => {
                    selections.push(None);
                    reason.get_or_insert_with(|| format!("annotator {annotator}: {e}"));
                }
            },
        }
    }
    record.annotator_selections = selections;
    if let Some(reason) = reason {
        record.status = RecordStatus::Discarded { reason };
    }
}

fn default_instructions_per_set() -> usize {
    5
}

fn default_empty_target_fraction() -> f64 {
    0.05
}

fn default_retries() -> usize {
    2
}

fn default_ratio() -> f64 {
    0.15
}

fn default_cap() -> usize {
    10
}

/// Grounding policy knobs as they appear in config files.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    #[serde(default = "default_ratio")]
    pub ratio: f64,
    #[serde(default = "default_cap")]
    pub cap: usize,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        PolicyConfig {
            ratio: default_ratio(),
            cap: default_cap(),
        }
    }
}

impl From<PolicyConfig> for GroundingPolicy {
    fn from(config: PolicyConfig) -> Self {
        GroundingPolicy {
            ratio: config.ratio,
            cap: config.cap,
        }
    }
}

/// Synthesis settings as stored in a TOML or JSON config file. The seed is
/// not part of the file; it always comes from the command line.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisFileConfig {
    #[serde(default = "default_instructions_per_set")]
    pub instructions_per_set: usize,
    #[serde(default = "default_empty_target_fraction")]
    pub empty_target_fraction: f64,
    #[serde(default)]
    pub merge: MergeStrategy,
    #[serde(default)]
    pub one_step: bool,
    #[serde(default)]
    pub policy: PolicyConfig,
    #[serde(default = "default_retries")]
    pub retries: usize,
    pub annotators: Vec<BackendConfig>,
}

impl SynthesisFileConfig {
    pub fn into_parts(self, seed: u64) -> (SynthesisConfig, Vec<BackendConfig>) {
        (
            SynthesisConfig {
                instructions_per_set: self.instructions_per_set,
                empty_target_fraction: self.empty_target_fraction,
                merge: self.merge,
                one_step: self.one_step,
                policy: self.policy.into(),
                retries: self.retries,
                seed,
            },
            self.annotators,
        )
    }
}

/// Loads a synthesis config from a `.toml` or `.json` file.
pub fn load_synthesis_config(path: &Path) -> Result<SynthesisFileConfig, SynthesisError> {
    let text = std::fs::read_to_string(path).map_err(|e| SynthesisError::Config {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let result = if is_json {
        serde_json::from_str(&text).map_err(|e| e.to_string())
    } else {
        toml::from_str(&text).map_err(|e| e.to_string())
    };
    result.map_err(|message| SynthesisError::Config {
        path: path.display().to_string(),
        message,
    })
}
