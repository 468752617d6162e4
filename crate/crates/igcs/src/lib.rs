//! Instruction-guided content selection: datasets, prompting, inference,
//! evaluation, and dataset synthesis.
//!
//! The scoring and grounding algorithms live in [`igcs_core`]; this crate
//! adds everything that touches the outside world — JSONL datasets, prompt
//! rendering, model backends, the synthesis pipeline, reports, and the
//! `igcs` command-line tool.

pub mod backend;
pub mod cli;
pub mod dataset;
pub mod inference;
pub mod prompt;
pub mod report;
pub mod stats;
pub mod synthesis;

pub use igcs_core as core;
