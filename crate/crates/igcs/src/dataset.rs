//! JSONL dataset and prediction files.
//!
//! One instance per line. All offsets are char offsets; selections are
//! normalized (sorted, overlaps merged) on load, and every record is
//! validated against the instance invariants before it is accepted.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use igcs_core::types::{CoreError, Document, Instance, Selection, Span};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}:{line}: invalid record: {source}")]
    Invalid {
        path: String,
        line: usize,
        source: CoreError,
    },
    #[error("{path}:{line}: duplicate id \"{id}\"")]
    DuplicateId {
        path: String,
        line: usize,
        id: String,
    },
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl DatasetError {
    fn io(path: &Path, source: std::io::Error) -> Self {
        DatasetError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct DocumentWire {
    id: String,
    text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sentences: Option<Vec<(usize, usize)>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SpanWire {
    doc: usize,
    start: usize,
    end: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct InstanceWire {
    id: String,
    task: String,
    instruction: String,
    selection_type: String,
    source_type: String,
    allow_empty: bool,
    documents: Vec<DocumentWire>,
    references: Vec<Vec<SpanWire>>,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
}

impl InstanceWire {
    fn into_instance(self) -> Result<Instance, CoreError> {
        let documents = self
            .documents
            .into_iter()
            .map(|d| Document {
                id: d.id,
                text: d.text,
                sentences: d.sentences,
            })
            .collect();
        let references = self
            .references
            .into_iter()
            .map(|spans| {
                Selection::new(
                    spans
                        .into_iter()
                        .map(|s| Span::new(s.doc, s.start, s.end))
                        .collect(),
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        let instance = Instance {
            id: self.id,
            task: self.task,
            instruction: self.instruction,
            selection_type: self.selection_type,
            source_type: self.source_type,
            documents,
            references,
            allow_empty: self.allow_empty,
            metadata: self.metadata,
        };
        instance.validate()?;
        Ok(instance)
    }

    fn from_instance(instance: &Instance) -> Self {
        InstanceWire {
            id: instance.id.clone(),
            task: instance.task.clone(),
            instruction: instance.instruction.clone(),
            selection_type: instance.selection_type.clone(),
            source_type: instance.source_type.clone(),
            allow_empty: instance.allow_empty,
            documents: instance
                .documents
                .iter()
                .map(|d| DocumentWire {
                    id: d.id.clone(),
                    text: d.text.clone(),
                    sentences: d.sentences.clone(),
                })
                .collect(),
            references: instance
                .references
                .iter()
                .map(|sel| {
                    sel.iter()
                        .map(|s| SpanWire {
                            doc: s.doc,
                            start: s.start,
                            end: s.end,
                        })
                        .collect()
                })
                .collect(),
            metadata: instance.metadata.clone(),
        }
    }
}

/// Loads a JSONL dataset, validating every record. Errors carry the file
/// path and 1-based line number; parse errors repeat serde's field
/// diagnostics.
pub fn load_dataset(path: &Path) -> Result<Vec<Instance>, DatasetError> {
    let file = File::open(path).map_err(|e| DatasetError::io(path, e))?;
    let reader = BufReader::new(file);
    let mut instances = Vec::new();
    let mut seen = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| DatasetError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let wire: InstanceWire =
            serde_json::from_str(&line).map_err(|e| DatasetError::Parse {
                path: path.display().to_string(),
                line: line_no,
                message: e.to_string(),
            })?;
        if let Some(first) = seen.insert(wire.id.clone(), line_no) {
            return Err(DatasetError::DuplicateId {
                path: path.display().to_string(),
                line: line_no,
                id: format!("{} (first seen at line {first})", wire.id),
            });
        }
        let instance = wire.into_instance().map_err(|e| DatasetError::Invalid {
            path: path.display().to_string(),
            line: line_no,
            source: e,
        })?;
        instances.push(instance);
    }
    Ok(instances)
}

/// Writes a dataset as JSONL, one instance per line.
pub fn save_dataset(instances: &[Instance], path: &Path) -> Result<(), DatasetError> {
    let file = File::create(path).map_err(|e| DatasetError::io(path, e))?;
    let mut writer = BufWriter::new(file);
    for instance in instances {
        let wire = InstanceWire::from_instance(instance);
        let line = serde_json::to_string(&wire).expect("instance serialization cannot fail");
        writeln!(writer, "{line}").map_err(|e| DatasetError::io(path, e))?;
    }
    writer.flush().map_err(|e| DatasetError::io(path, e))
}

/// One model prediction for one instance, as stored in predictions JSONL.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Prediction {
    pub id: String,
    /// How the prediction was produced: "whole-set", "per-doc", or "ground".
    pub mode: String,
    pub spans: Vec<PredictionSpan>,
    /// Output strings that could not be grounded.
    #[serde(default)]
    pub discarded: Vec<String>,
    /// Whether any model response failed to parse as an array of strings.
    #[serde(default)]
    pub invalid_format: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
pub struct PredictionSpan {
    pub doc: usize,
    pub start: usize,
    pub end: usize,
}

impl Prediction {
    pub fn selection(&self) -> Result<Selection, CoreError> {
        if self.spans.is_empty() {
            return Ok(Selection::empty());
        }
        Selection::new(
            self.spans
                .iter()
                .map(|s| Span::new(s.doc, s.start, s.end))
                .collect(),
        )
    }

    pub fn from_selection(id: &str, mode: &str, selection: &Selection) -> Self {
        Prediction {
            id: id.to_string(),
            mode: mode.to_string(),
            spans: selection
                .iter()
                .map(|s| PredictionSpan {
                    doc: s.doc,
                    start: s.start,
                    end: s.end,
                })
                .collect(),
            discarded: Vec::new(),
            invalid_format: false,
        }
    }
}

/// Loads a predictions JSONL file.
pub fn load_predictions(path: &Path) -> Result<Vec<Prediction>, DatasetError> {
    load_jsonl(path)
}

/// Writes predictions as JSONL.
pub fn save_predictions(predictions: &[Prediction], path: &Path) -> Result<(), DatasetError> {
    save_jsonl(predictions, path)
}

/// Raw output strings awaiting grounding, one record per instance:
/// `{"id": ..., "outputs": [...], "doc": optional document scope}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawSelections {
    pub id: String,
    pub outputs: Vec<String>,
    /// When set, grounding searches only this document.
    #[serde(default)]
    pub doc: Option<usize>,
}

pub fn load_raw_selections(path: &Path) -> Result<Vec<RawSelections>, DatasetError> {
    load_jsonl(path)
}

/// Generic JSONL reader with per-line diagnostics.
pub fn load_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, DatasetError> {
    let file = File::open(path).map_err(|e| DatasetError::io(path, e))?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| DatasetError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| DatasetError::Parse {
            path: path.display().to_string(),
            line: idx + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Generic JSONL writer.
pub fn save_jsonl<T: Serialize>(records: &[T], path: &Path) -> Result<(), DatasetError> {
    let file = File::create(path).map_err(|e| DatasetError::io(path, e))?;
    let mut writer = BufWriter::new(file);
    for record in records {
        let line = serde_json::to_string(record).map_err(|e| DatasetError::Parse {
            path: path.display().to_string(),
            line: 0,
            message: e.to_string(),
        })?;
        writeln!(writer, "{line}").map_err(|e| DatasetError::io(path, e))?;
    }
    writer.flush().map_err(|e| DatasetError::io(path, e))
}
