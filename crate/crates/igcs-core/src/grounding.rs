//! Grounding model outputs back to source spans.
//!
//! Models asked to copy text verbatim often drift: case changes, dropped
//! punctuation, a paraphrased word. Grounding recovers the source span a
//! piece of output text came from, or rejects it when nothing in the
//! sources is close enough.
//!
//! The procedure per output string:
//!
//! 1. trim whitespace; an empty result is discarded outright;
//! 2. case-insensitive exact substring search — a hit grounds at the first
//!    occurrence;
//! 3. otherwise a fuzzy pass: with `m` output tokens and edit budget
//!    `d_max = min(floor(ratio * m), cap)`, every source token window of
//!    length `m ± d_max` is scored by token-level Levenshtein distance over
//!    case-folded tokens, and the best window within budget wins. Ties
//!    break to the lowest distance, then earliest start, then earliest end.
//!
//! A fuzzy window at distance zero (whitespace or layout differences only)
//! reports as an exact match, so `Fuzzy` always carries distance >= 1.

use alloc::string::String;
use alloc::vec::Vec;

use crate::tokenize::{fold_str, tokenize, Token};
use crate::types::{CoreError, Document, Instance, Selection, Span};

/// Edit-budget policy for fuzzy grounding: `d_max = min(floor(ratio * m), cap)`
/// where `m` is the output's token count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundingPolicy {
    /// Fraction of the output's token count allowed as edits.
    pub ratio: f64,
    /// Absolute cap on the edit budget.
    pub cap: usize,
}

impl Default for GroundingPolicy {
    fn default() -> Self {
        GroundingPolicy {
            ratio: 0.15,
            cap: 10,
        }
    }
}

/// Why an output string could not be grounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiscardReason {
    /// Empty or whitespace-only after trimming.
    Empty,
    /// No source window within the edit budget.
    NoMatch,
}

/// How an output string grounded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroundingOutcome {
    /// Verbatim (up to case) substring of a source document, or a fuzzy
    /// window at distance zero.
    Exact,
    /// Best window matched with this token edit distance (always >= 1).
    Fuzzy(usize),
    /// Rejected.
    Discarded(DiscardReason),
}

/// The grounding of one output string.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GroundingResult {
    pub outcome: GroundingOutcome,
    /// The grounded source span; `None` exactly when discarded.
    pub span: Option<Span>,
}

impl GroundingResult {
    fn discarded(reason: DiscardReason) -> Self {
        GroundingResult {
            outcome: GroundingOutcome::Discarded(reason),
            span: None,
        }
    }

    pub fn is_grounded(&self) -> bool {
        self.span.is_some()
    }

    pub fn is_discarded(&self) -> bool {
        self.span.is_none()
    }

    /// Edit distance of the match: 0 for exact, `None` when discarded.
    pub fn distance(&self) -> Option<usize> {
        match self.outcome {
            GroundingOutcome::Exact => Some(0),
            GroundingOutcome::Fuzzy(d) => Some(d),
            GroundingOutcome::Discarded(_) => None,
        }
    }
}

/// The edit budget for an output of `m` tokens: `min(floor(ratio * m), cap)`.
pub fn threshold(policy: &GroundingPolicy, m: usize) -> usize {
    // Decimal ratios are not exact in binary: 0.15 * 20 computes as
    // 2.999999999999999… though floor(0.15 * 20) must be 3. Nudge products
    // sitting within one part in 10^9 of the next integer up before
    // flooring.
    let scaled = policy.ratio * m as f64 + 1e-9;
    // Truncation equals floor for non-negative values; NaN and negatives
    // clamp to zero.
    let floored = if scaled > 0.0 { scaled as usize } else { 0 };
    floored.min(policy.cap)
}

/// Token-level Levenshtein distance over the fold texts of two token
/// sequences. Insertions, deletions, and substitutions all cost 1.
pub fn token_levenshtein<A: AsRef<str>, B: AsRef<str>>(a: &[A], b: &[B]) -> usize {
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur: Vec<usize> = alloc::vec![0; b.len() + 1];
    for (i, ta) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, tb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ta.as_ref() != tb.as_ref());
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Banded Levenshtein: the distance when it is at most `limit`, else `None`.
/// Cells farther than `limit` from the diagonal cannot contribute to a
/// result within the limit, so only the band is computed, and the search
/// stops early once a whole row exceeds the limit.
pub fn token_levenshtein_within<A: AsRef<str>, B: AsRef<str>>(
    a: &[A],
    b: &[B],
    limit: usize,
) -> Option<usize> {
    let (n, m) = (a.len(), b.len());
    if n.abs_diff(m) > limit {
        return None;
    }
    const INF: usize = usize::MAX / 2;
    let mut prev: Vec<usize> = alloc::vec![INF; m + 1];
    let mut cur: Vec<usize> = alloc::vec![INF; m + 1];
    for (j, slot) in prev.iter_mut().enumerate().take(m.min(limit) + 1) {
        *slot = j;
    }
    for i in 1..=n {
        let jlo = i.saturating_sub(limit);
        let jhi = (i + limit).min(m);
        if jlo > 0 {
            cur[jlo - 1] = INF;
        }
        let mut row_min = INF;
        for j in jlo..=jhi {
            let val = if j == 0 {
                i
            } else {
                let cost = usize::from(a[i - 1].as_ref() != b[j - 1].as_ref());
                (prev[j - 1] + cost).min(prev[j] + 1).min(cur[j - 1] + 1)
            };
            cur[j] = val;
            row_min = row_min.min(val);
        }
        if jhi < m {
            cur[jhi + 1] = INF;
        }
        if row_min > limit {
            return None;
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    (prev[m] <= limit).then_some(prev[m])
}

/// Case-folded text and token table for one document, reusable across many
/// `ground_span_indexed` calls.
#[derive(Debug, Clone)]
pub struct DocIndex {
    folded: String,
    tokens: Vec<Token>,
}

impl DocIndex {
    pub fn new(text: &str) -> Self {
        DocIndex {
            folded: fold_str(text),
            tokens: tokenize(text),
        }
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }
}

/// Grounds one output string against one document. The resulting span
/// carries `doc = 0`; use [`ground_selection`] for instance-level document
/// indices.
pub fn ground_span(output: &str, document: &Document, policy: &GroundingPolicy) -> GroundingResult {
    ground_span_indexed(output, &DocIndex::new(&document.text), 0, policy)
}

/// Grounds one output string against a pre-built document index, reporting
/// spans with the given document index.
pub fn ground_span_indexed(
    output: &str,
    index: &DocIndex,
    doc: usize,
    policy: &GroundingPolicy,
) -> GroundingResult {
    let trimmed = output.trim();
    if trimmed.is_empty() {
        return GroundingResult::discarded(DiscardReason::Empty);
    }

    // Stage 1: case-insensitive exact substring search. Folding is
    // char-for-char, so char offsets in the folded text equal char offsets
    // in the original.
    let needle = fold_str(trimmed);
    if let Some(byte_pos) = index.folded.find(&needle) {
        let start = index.folded[..byte_pos].chars().count();
        let end = start + needle.chars().count();
        return GroundingResult {
            outcome: GroundingOutcome::Exact,
            span: Some(Span::new(doc, start, end)),
        };
    }

    // Stage 2: fuzzy search over source token windows.
    let out_tokens = tokenize(trimmed);
    let m = out_tokens.len();
    let d_max = threshold(policy, m);
    if d_max == 0 || index.tokens.is_empty() {
        return GroundingResult::discarded(DiscardReason::NoMatch);
    }
    let out_folds: Vec<&str> = out_tokens.iter().map(|t| t.fold.as_str()).collect();
    let src_folds: Vec<&str> = index.tokens.iter().map(|t| t.fold.as_str()).collect();
    let n = src_folds.len();
    let len_lo = m.saturating_sub(d_max).max(1);
    let len_hi = (m + d_max).min(n);

    // Best candidate as (distance, start char, end char): the tuple order
    // is exactly the tie-break order.
    let mut best: Option<(usize, usize, usize)> = None;
    'starts: for start in 0..n {
        for len in len_lo..=len_hi {
            if start + len > n {
                break;
            }
            let window = &src_folds[start..start + len];
            if let Some(d) = token_levenshtein_within(&out_folds, window, d_max) {
                let cand = (
                    d,
                    index.tokens[start].start,
                    index.tokens[start + len - 1].end,
                );
                if best.is_none_or(|b| cand < b) {
                    best = Some(cand);
                }
                if d == 0 {
                    // Nothing later can beat a zero-distance window at the
                    // earliest start and end seen so far.
                    break 'starts;
                }
            }
        }
    }

    match best {
        None => GroundingResult::discarded(DiscardReason::NoMatch),
        Some((0, start, end)) => GroundingResult {
            outcome: GroundingOutcome::Exact,
            span: Some(Span::new(doc, start, end)),
        },
        Some((d, start, end)) => GroundingResult {
            outcome: GroundingOutcome::Fuzzy(d),
            span: Some(Span::new(doc, start, end)),
        },
    }
}

/// Grounds a batch of output strings against an instance's documents and
/// assembles the grounded spans into a normalized selection.
///
/// With `doc_scope = Some(d)` only document `d` is searched (the per-doc
/// inference mode); otherwise every document is searched and the best
/// grounding wins — lowest distance, then lowest document index, then
/// earliest span. Returns the merged selection plus one result per output
/// string, in input order.
pub fn ground_selection(
    outputs: &[String],
    instance: &Instance,
    doc_scope: Option<usize>,
    policy: &GroundingPolicy,
) -> Result<(Selection, Vec<GroundingResult>), CoreError> {
    let num_docs = instance.documents.len();
    if let Some(d) = doc_scope {
        if d >= num_docs {
            return Err(CoreError::DocOutOfRange {
                doc: d,
                num_docs,
            });
        }
    }
    let scope: Vec<usize> = match doc_scope {
        Some(d) => alloc::vec![d],
        None => (0..num_docs).collect(),
    };
    let indexes: Vec<DocIndex> = scope
        .iter()
        .map(|&d| DocIndex::new(&instance.documents[d].text))
        .collect();

    let mut results = Vec::with_capacity(outputs.len());
    let mut spans = Vec::new();
    for output in outputs {
        let mut best: Option<GroundingResult> = None;
        for (&doc, index) in scope.iter().zip(&indexes) {
            let result = ground_span_indexed(output, index, doc, policy);
            if better(&result, best.as_ref()) {
                best = Some(result);
            }
            if matches!(result.outcome, GroundingOutcome::Exact) {
                // Later documents cannot beat an exact match here: distance
                // is already zero and document indices only grow.
                break;
            }
        }
        let result = best.unwrap_or(GroundingResult::discarded(DiscardReason::Empty));
        if let Some(span) = result.span {
            spans.push(span);
        }
        results.push(result);
    }
    Ok((Selection::new(spans)?, results))
}

/// Whether `candidate` outranks `best`: grounded beats discarded, then
/// lower distance, then lower document index, then earlier span.
fn better(candidate: &GroundingResult, best: Option<&GroundingResult>) -> bool {
    let Some(best) = best else { return true };
    match (candidate.distance(), best.distance()) {
        (None, _) => false,
        (Some(_), None) => true,
        (Some(cd), Some(bd)) => {
            let c = candidate.span.expect("grounded result has a span");
            let b = best.span.expect("grounded result has a span");
            (cd, c.doc, c.start, c.end) < (bd, b.doc, b.start, b.end)
        }
    }
}
