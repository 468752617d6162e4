//! Prompt construction and model-output parsing.
//!
//! A [`PromptTemplate`] carries the instruction body (with `{slot}`
//! placeholders) and optional in-context examples. Rendering appends the
//! numbered `document #k:` blocks for the instance's documents, or for a
//! chosen subset of them (renumbered from zero).

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use igcs_core::rng::fnv1a;
use igcs_core::types::Instance;

/// Default instruction body appended with document blocks at render time.
pub const DEFAULT_BODY: &str = include_str!("../templates/selection_prompt.txt");

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("unresolved template slot \"{0}\"")]
    UnresolvedSlot(String),
    #[error("document index {doc} out of range for {num_docs} documents")]
    DocOutOfRange { doc: usize, num_docs: usize },
    #[error("document subset must not be empty")]
    EmptySubset,
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("no well-formed json array of strings in model output")]
    InvalidFormat,
}

/// One worked example shown to the model before the live input.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct IclExample {
    pub instruction: String,
    /// Document texts, rendered as `document #k:` blocks.
    pub documents: Vec<String>,
    /// The correct output, serialized exactly as the model must answer.
    pub payload: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplate {
    /// Instruction body with `{slot}` placeholders.
    pub body: String,
    /// In-context examples; empty for zero-shot prompts.
    pub icl: Vec<IclExample>,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate {
            body: DEFAULT_BODY.trim_end_matches('\n').to_string(),
            icl: Vec::new(),
        }
    }
}

impl PromptTemplate {
    /// Reads a custom body from a file; a single trailing newline is not
    /// part of the prompt.
    pub fn from_file(path: &Path) -> Result<Self, PromptError> {
        let body = std::fs::read_to_string(path).map_err(|e| PromptError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Ok(PromptTemplate {
            body: body.trim_end_matches('\n').to_string(),
            icl: Vec::new(),
        })
    }

    /// Stable hex fingerprint of the body and examples, embedded in reports
    /// so a result can be traced back to the exact prompt that produced it.
    pub fn fingerprint(&self) -> String {
        let icl = serde_json::to_string(&self.icl).expect("examples serialize");
        let mut bytes = self.body.clone().into_bytes();
        bytes.push(0);
        bytes.extend_from_slice(icl.as_bytes());
        format!("{:016x}", fnv1a(&bytes))
    }
}

/// Fills `{slot}` placeholders using `resolve`. Replacement values are never
/// rescanned, so braces inside instance fields pass through untouched. A `{`
/// that does not introduce a well-formed slot name is kept literally.
pub fn fill(
    template: &str,
    mut resolve: impl FnMut(&str) -> Option<String>,
) -> Result<String, PromptError> {
    let mut out = String::with_capacity(template.len());
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let tail = &rest[open + 1..];
        let close = tail.find(|c: char| !slot_char(c));
        match close {
            Some(end) if tail[end..].starts_with('}') && end > 0 => {
                let name = &tail[..end];
                match resolve(name) {
                    Some(value) => out.push_str(&value),
                    None => return Err(PromptError::UnresolvedSlot(name.to_string())),
                }
                rest = &tail[end + 1..];
            }
            _ => {
                out.push('{');
                rest = tail;
            }
        }
    }
    out.push_str(rest);
    Ok(out)
}

fn slot_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '_' | ':' | '.' | '-')
}

fn resolve_instance_slot(instance: &Instance, name: &str) -> Option<String> {
    match name {
        "instruction" => Some(instance.instruction.clone()),
        "selection_type" => Some(instance.selection_type.clone()),
        "source_type" => Some(instance.source_type.clone()),
        "id" => Some(instance.id.clone()),
        "task" => Some(instance.task.clone()),
        _ => instance.metadata.get(name).cloned(),
    }
}

/// Renders `document #k:` blocks, one per text, numbered from zero.
pub fn document_blocks<S: AsRef<str>>(texts: &[S]) -> String {
    let mut out = String::new();
    for (k, text) in texts.iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        out.push_str(&format!("document #{k}:\n{}", text.as_ref()));
    }
    out
}

/// Renders the full prompt for an instance.
///
/// With `doc_subset`, only the listed documents are included, renumbered
/// from zero in the given order; `None` includes all documents. With
/// in-context examples, the example blocks sit between the instruction body
/// and the live input, closed by an `— END OF EXAMPLES —` separator.
pub fn render_prompt(
    instance: &Instance,
    template: &PromptTemplate,
    doc_subset: Option<&[usize]>,
) -> Result<String, PromptError> {
    let mut texts: Vec<&str> = Vec::new();
    match doc_subset {
        None => texts.extend(instance.documents.iter().map(|d| d.text.as_str())),
        Some(subset) => {
            if subset.is_empty() {
                return Err(PromptError::EmptySubset);
            }
            for &doc in subset {
                let document =
                    instance
                        .documents
                        .get(doc)
                        .ok_or(PromptError::DocOutOfRange {
                            doc,
                            num_docs: instance.documents.len(),
                        })?;
                texts.push(&document.text);
            }
        }
    }

    let mut out = fill(&template.body, |name| resolve_instance_slot(instance, name))?;
    if !template.icl.is_empty() {
        out.push_str(if template.icl.len() == 1 {
            " Below is an example of an input and the correct selected content:"
        } else {
            " Below are examples of an input and the correct selected content:"
        });
        for example in &template.icl {
            out.push_str("\n\nInstruction: ");
            out.push_str(&example.instruction);
            out.push_str("\n\n");
            out.push_str(&document_blocks(&example.documents));
            out.push_str("\n\n");
            out.push_str(&serde_json::to_string(&example.payload).expect("payload serializes"));
        }
        out.push_str("\n\n— END OF EXAMPLES —\n\nNow, select content from the below document(s):");
    }
    out.push_str("\n\n");
    out.push_str(&document_blocks(&texts));
    Ok(out)
}

/// Extracts the first well-formed JSON array of strings from a model
/// response, tolerating surrounding prose and code fences. An empty array is
/// a valid empty selection. No such payload anywhere → [`PromptError::InvalidFormat`].
pub fn parse_output(response: &str) -> Result<Vec<String>, PromptError> {
    for value in candidate_arrays(response) {
        if let Some(strings) = as_string_list(&value) {
            return Ok(strings);
        }
    }
    Err(PromptError::InvalidFormat)
}

/// Parsed entries of a two-level nested list, positionally aligned with the
/// prompt's numbered instructions. `None` marks an entry that is not a
/// string list.
pub type NestedEntries = Vec<Option<Vec<String>>>;

/// Extracts the first nested list (array whose elements include at least one
/// array of strings) from a model response. Entries that fail to parse are
/// `None`; a response with no such list at all yields `None` overall.
pub fn parse_nested(response: &str) -> Option<NestedEntries> {
    for value in candidate_arrays(response) {
        let serde_json::Value::Array(items) = &value else {
            continue;
        };
        let entries: NestedEntries = items.iter().map(as_string_list).collect();
        if entries.iter().any(|e| e.is_some()) {
            return Some(entries);
        }
    }
    None
}

/// Yields every JSON array that parses from some `[` position onward,
/// leftmost first. Trailing prose after a complete value is ignored.
fn candidate_arrays(response: &str) -> impl Iterator<Item = serde_json::Value> + '_ {
    response
        .char_indices()
        .filter(|&(_, c)| c == '[')
        .filter_map(|(pos, _)| {
            serde_json::Deserializer::from_str(&response[pos..])
                .into_iter::<serde_json::Value>()
                .next()?
                .ok()
        })
        .filter(|v| v.is_array())
}

fn as_string_list(value: &serde_json::Value) -> Option<Vec<String>> {
    let items = value.as_array()?;
    items
        .iter()
        .map(|v| v.as_str().map(str::to_string))
        .collect()
}

/// Builds in-context examples from reference-bearing instances: the payload
/// is the first reference's span texts, in order.
pub fn icl_examples_from(instances: &[Instance]) -> Vec<IclExample> {
    instances
        .iter()
        .map(|instance| {
            let payload = instance
                .references
                .first()
                .map(|sel| {
                    sel.iter()
                        .map(|span| {
                            igcs_core::types::char_slice(
                                &instance.documents[span.doc].text,
                                span.start,
                                span.end,
                            )
                            .to_string()
                        })
                        .collect()
                })
                .unwrap_or_default();
            IclExample {
                instruction: instance.instruction.clone(),
                documents: instance.documents.iter().map(|d| d.text.clone()).collect(),
                payload,
            }
        })
        .collect()
}

/// Renders one synthesis template by name-value substitution. Values are
/// plain text except `task_sentence`, which the caller pre-resolves.
pub(crate) fn fill_named(
    template: &str,
    slots: &BTreeMap<&str, String>,
) -> Result<String, PromptError> {
    fill(template, |name| slots.get(name).cloned())
}
