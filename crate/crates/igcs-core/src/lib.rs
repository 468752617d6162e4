//! Core algorithms for instruction-guided content selection.
//!
//! A *selection* is a set of character spans over a set of source
//! documents, picked in response to a natural-language instruction. This
//! crate holds everything needed to evaluate and normalize selections
//! without any IO:
//!
//! - [`types`]: documents, instances, spans, selections, token sets;
//! - [`tokenize`]: the reference tokenizer, sentence segmentation, and the
//!   span ⇄ token-set mappings;
//! - [`grounding`]: recovering source spans from model output text, with
//!   fuzzy matching under a token edit budget;
//! - [`metrics`]: token-level P/R/F1 with the multi-reference max rule,
//!   sentence and bigram variants, task/benchmark aggregation, bootstrap
//!   confidence intervals, a paired permutation test, and inter-annotator
//!   agreement;
//! - [`rng`]: deterministic random streams for the resampling procedures.
//!
//! The crate is `no_std` (with `alloc`) so the scoring and grounding rules
//! can be embedded anywhere; all container types iterate in deterministic
//! order, and every randomized procedure is seeded explicitly.

#![cfg_attr(not(test), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod grounding;
pub mod metrics;
pub mod rng;
pub mod tokenize;
pub mod types;

pub use grounding::{
    ground_selection, ground_span, threshold, token_levenshtein, DiscardReason, GroundingOutcome,
    GroundingPolicy, GroundingResult,
};
pub use metrics::{
    agreement, aggregate_benchmark, aggregate_task, bootstrap_ci, evaluate_task, multi_ref_score,
    permutation_test, rouge2_f1, token_f1, BenchmarkReport, ConfidenceInterval, EvalReport,
    InstanceScore, Metric, ScoreTriple, TaskScores,
};
pub use tokenize::{
    segment_sentences, span_to_tokens, tokenize, tokens_to_spans, InstanceTokens, Token,
};
pub use types::{CoreError, Document, Instance, Selection, Span, TokenIndexSet};
