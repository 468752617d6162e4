//! Core data model: documents, instances, spans, selections, and token sets.
//!
//! All offsets in this crate are **character** offsets (Unicode scalar
//! values), never bytes. Ranges are half-open `[start, end)`.

use alloc::collections::btree_map::BTreeMap;
use alloc::collections::btree_set::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// A single source text, optionally with pre-computed sentence boundaries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    /// Stable identifier, unique within an instance.
    pub id: String,
    /// The raw text. Spans address it by char offset.
    pub text: String,
    /// Optional explicit sentence ranges (half-open char offsets, sorted,
    /// non-overlapping). When absent, sentence-level metrics fall back to
    /// rule-based segmentation.
    pub sentences: Option<Vec<(usize, usize)>>,
}

impl Document {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        Document {
            id: id.into(),
            text: text.into(),
            sentences: None,
        }
    }

    /// Length of the text in chars (the exclusive upper bound for spans).
    pub fn char_len(&self) -> usize {
        self.text.chars().count()
    }
}

/// One contiguous char range `[start, end)` inside one document of an
/// instance. `doc` is the index into the instance's document list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Span {
    pub doc: usize,
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(doc: usize, start: usize, end: usize) -> Self {
        Span { doc, start, end }
    }

    /// Number of chars covered.
    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "doc {} [{}, {})", self.doc, self.start, self.end)
    }
}

/// A set of selected regions: spans sorted by `(doc, start)` with overlapping
/// spans merged at construction. Adjacent-but-disjoint spans are kept
/// separate, so `[0,2)` and `[2,4)` remain two spans.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Selection {
    spans: Vec<Span>,
}

impl Selection {
    /// Normalizes `spans` into a selection. Empty spans (`start >= end`) are
    /// rejected; overlapping spans in the same document are merged.
    pub fn new(mut spans: Vec<Span>) -> Result<Self, CoreError> {
        for s in &spans {
            if s.is_empty() {
                return Err(CoreError::EmptySpan {
                    doc: s.doc,
                    start: s.start,
                    end: s.end,
                });
            }
        }
        spans.sort_unstable();
        let mut merged: Vec<Span> = Vec::with_capacity(spans.len());
        for s in spans {
            match merged.last_mut() {
                Some(last) if last.doc == s.doc && s.start < last.end => {
                    last.end = last.end.max(s.end);
                }
                _ => merged.push(s),
            }
        }
        Ok(Selection { spans: merged })
    }

    /// The selection with no spans (an explicit "nothing matches").
    pub fn empty() -> Self {
        Selection::default()
    }

    pub fn spans(&self) -> &[Span] {
        &self.spans
    }

    pub fn len(&self) -> usize {
        self.spans.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spans.is_empty()
    }

    pub fn iter(&self) -> core::slice::Iter<'_, Span> {
        self.spans.iter()
    }
}

impl<'a> IntoIterator for &'a Selection {
    type Item = &'a Span;
    type IntoIter = core::slice::Iter<'a, Span>;
    fn into_iter(self) -> Self::IntoIter {
        self.spans.iter()
    }
}

/// One selection problem: an instruction over a document set, with one or
/// more reference selections.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    /// Unique id within a dataset.
    pub id: String,
    /// Task / benchmark name the instance belongs to.
    pub task: String,
    /// The natural-language selection instruction.
    pub instruction: String,
    /// What kind of content is selected, e.g. "text phrases" or "code".
    pub selection_type: String,
    /// What the sources are, e.g. "document(s)" or "source file(s)".
    pub source_type: String,
    pub documents: Vec<Document>,
    /// Reference selections; scoring takes the best match over all of them.
    pub references: Vec<Selection>,
    /// Whether an empty reference selection is legal for this instance.
    pub allow_empty: bool,
    pub metadata: BTreeMap<String, String>,
}

impl Instance {
    /// Checks internal consistency: span bounds, sentence ranges, and the
    /// `allow_empty` contract.
    pub fn validate(&self) -> Result<(), CoreError> {
        let lens: Vec<usize> = self.documents.iter().map(|d| d.char_len()).collect();
        for (di, doc) in self.documents.iter().enumerate() {
            if let Some(sentences) = &doc.sentences {
                let mut prev_end = 0usize;
                for &(start, end) in sentences {
                    if start >= end || start < prev_end || end > lens[di] {
                        return Err(CoreError::BadSentenceRanges { doc: di });
                    }
                    prev_end = end;
                }
            }
        }
        for (ri, reference) in self.references.iter().enumerate() {
            if !self.allow_empty && reference.is_empty() {
                return Err(CoreError::EmptyReference { reference: ri });
            }
            for span in reference {
                if span.doc >= self.documents.len() {
                    return Err(CoreError::DocOutOfRange {
                        doc: span.doc,
                        num_docs: self.documents.len(),
                    });
                }
                if span.end > lens[span.doc] {
                    return Err(CoreError::SpanOutOfBounds {
                        doc: span.doc,
                        end: span.end,
                        len: lens[span.doc],
                    });
                }
            }
        }
        Ok(())
    }
}

/// A set of `(doc index, token index)` pairs — the unit evaluation operates
/// on. Backed by an ordered set so iteration order is deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenIndexSet {
    members: BTreeSet<(usize, usize)>,
}

impl TokenIndexSet {
    pub fn new() -> Self {
        TokenIndexSet::default()
    }

    pub fn insert(&mut self, doc: usize, index: usize) -> bool {
        self.members.insert((doc, index))
    }

    pub fn contains(&self, doc: usize, index: usize) -> bool {
        self.members.contains(&(doc, index))
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Iterates members in `(doc, index)` order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.members.iter().copied()
    }

    pub fn intersection_len(&self, other: &Self) -> usize {
        // Walk the smaller set, probe the larger.
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .members
            .iter()
            .filter(|m| large.members.contains(m))
            .count()
    }

    pub fn union(&self, other: &Self) -> Self {
        TokenIndexSet {
            members: self.members.union(&other.members).copied().collect(),
        }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.members.is_subset(&other.members)
    }
}

impl FromIterator<(usize, usize)> for TokenIndexSet {
    fn from_iter<I: IntoIterator<Item = (usize, usize)>>(iter: I) -> Self {
        TokenIndexSet {
            members: iter.into_iter().collect(),
        }
    }
}

impl<'a> IntoIterator for &'a TokenIndexSet {
    type Item = (usize, usize);
    type IntoIter = core::iter::Copied<alloc::collections::btree_set::Iter<'a, (usize, usize)>>;
    fn into_iter(self) -> Self::IntoIter {
        self.members.iter().copied()
    }
}

/// Returns the substring of `text` covering the char range `[start, end)`.
/// Clamps to the end of the text if the range runs past it.
pub fn char_slice(text: &str, start: usize, end: usize) -> &str {
    if start >= end {
        return "";
    }
    let mut indices = text.char_indices().map(|(b, _)| b);
    let from = match indices.by_ref().nth(start) {
        Some(b) => b,
        None => return "",
    };
    let to = match indices.nth(end - start - 1) {
        Some(b) => b,
        None => text.len(),
    };
    &text[from..to]
}

/// Errors from core operations. Every variant carries enough context to
/// point at the offending input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoreError {
    /// A span with `start >= end`.
    EmptySpan { doc: usize, start: usize, end: usize },
    /// A span or token names a document index the instance does not have.
    DocOutOfRange { doc: usize, num_docs: usize },
    /// A span runs past the end of its document.
    SpanOutOfBounds { doc: usize, end: usize, len: usize },
    /// A token index is not a token of its document.
    TokenOutOfRange {
        doc: usize,
        index: usize,
        num_tokens: usize,
    },
    /// An empty reference on an instance declaring `allow_empty = false`.
    EmptyReference { reference: usize },
    /// Sentence ranges that are unsorted, overlapping, empty, or out of
    /// bounds.
    BadSentenceRanges { doc: usize },
    /// An operation that needs at least one reference selection.
    NoReferences,
    /// Paired inputs of different lengths.
    LengthMismatch { left: usize, right: usize },
    /// Agreement needs at least two annotators.
    TooFewAnnotators { count: usize },
    /// An aggregate over zero items.
    EmptyInput,
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::EmptySpan { doc, start, end } => {
                write!(f, "empty span [{start}, {end}) in doc {doc}")
            }
            CoreError::DocOutOfRange { doc, num_docs } => {
                write!(f, "document index {doc} out of range ({num_docs} documents)")
            }
            CoreError::SpanOutOfBounds { doc, end, len } => {
                write!(f, "span end {end} past end of doc {doc} ({len} chars)")
            }
            CoreError::TokenOutOfRange {
                doc,
                index,
                num_tokens,
            } => write!(
                f,
                "token index {index} out of range for doc {doc} ({num_tokens} tokens)"
            ),
            CoreError::EmptyReference { reference } => write!(
                f,
                "reference {reference} is empty but the instance does not allow empty selections"
            ),
            CoreError::BadSentenceRanges { doc } => write!(
                f,
                "sentence ranges of doc {doc} must be non-empty, sorted, disjoint, and in bounds"
            ),
            CoreError::NoReferences => write!(f, "instance has no reference selections"),
            CoreError::LengthMismatch { left, right } => {
                write!(f, "paired inputs differ in length ({left} vs {right})")
            }
            CoreError::TooFewAnnotators { count } => {
                write!(f, "agreement needs at least two annotators, got {count}")
            }
            CoreError::EmptyInput => write!(f, "input is empty"),
        }
    }
}

impl core::error::Error for CoreError {}
