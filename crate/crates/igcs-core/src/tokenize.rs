//! Whitespace/punctuation tokenization, sentence segmentation, and the
//! span ⇄ token-set mappings evaluation is defined over.
//!
//! The tokenizer is deliberately simple and reproducible: maximal runs of
//! alphanumeric chars form tokens, every other non-whitespace char is a
//! single-char token, and whitespace only separates. Offsets are char
//! offsets into the original text, so concatenating tokens and the gaps
//! between them reconstructs the text exactly.

use alloc::string::String;
use alloc::vec::Vec;

use crate::types::{CoreError, Document, Instance, Selection, Span, TokenIndexSet};

/// One token of a document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    /// Document index within the instance (0 for standalone text).
    pub doc: usize,
    /// Position within the document's token sequence.
    pub index: usize,
    /// Char offset of the first char.
    pub start: usize,
    /// Char offset one past the last char.
    pub end: usize,
    /// Case-folded text, used for matching and fuzzy search.
    pub fold: String,
}

/// Case-folds one char. Uses the full lowercase mapping only when it stays
/// a single char, so folding never changes offsets (ß stays ß).
pub fn fold_char(c: char) -> char {
    let mut lower = c.to_lowercase();
    match (lower.next(), lower.next()) {
        (Some(l), None) => l,
        _ => c,
    }
}

/// Case-folds a string char-by-char, preserving char count.
pub fn fold_str(text: &str) -> String {
    text.chars().map(fold_char).collect()
}

/// Tokenizes standalone text (tokens carry `doc = 0`).
pub fn tokenize(text: &str) -> Vec<Token> {
    tokenize_doc(0, text)
}

/// Tokenizes text as document `doc` of an instance.
pub fn tokenize_doc(doc: usize, text: &str) -> Vec<Token> {
    let mut tokens: Vec<Token> = Vec::new();
    let mut run_start: Option<usize> = None;
    let mut run_fold = String::new();

    let flush = |tokens: &mut Vec<Token>, run_start: &mut Option<usize>, run_fold: &mut String, pos: usize| {
        if let Some(start) = run_start.take() {
            tokens.push(Token {
                doc,
                index: tokens.len(),
                start,
                end: pos,
                fold: core::mem::take(run_fold),
            });
        }
    };

    let mut pos = 0;
    for c in text.chars() {
        if c.is_alphanumeric() {
            if run_start.is_none() {
                run_start = Some(pos);
            }
            run_fold.push(fold_char(c));
        } else {
            flush(&mut tokens, &mut run_start, &mut run_fold, pos);
            if !c.is_whitespace() {
                let mut fold = String::new();
                fold.push(fold_char(c));
                tokens.push(Token {
                    doc,
                    index: tokens.len(),
                    start: pos,
                    end: pos + 1,
                    fold,
                });
            }
        }
        pos += 1;
    }
    flush(&mut tokens, &mut run_start, &mut run_fold, pos);
    tokens
}

/// Per-document token tables for one instance, computed once and shared by
/// every operation that maps between spans and token sets.
#[derive(Debug, Clone)]
pub struct InstanceTokens {
    doc_tokens: Vec<Vec<Token>>,
    doc_char_lens: Vec<usize>,
}

impl InstanceTokens {
    pub fn new(documents: &[Document]) -> Self {
        InstanceTokens {
            doc_tokens: documents
                .iter()
                .enumerate()
                .map(|(i, d)| tokenize_doc(i, &d.text))
                .collect(),
            doc_char_lens: documents.iter().map(|d| d.char_len()).collect(),
        }
    }

    pub fn num_docs(&self) -> usize {
        self.doc_tokens.len()
    }

    /// Tokens of document `doc`.
    pub fn doc(&self, doc: usize) -> &[Token] {
        &self.doc_tokens[doc]
    }

    /// Char length of document `doc`.
    pub fn char_len(&self, doc: usize) -> usize {
        self.doc_char_lens[doc]
    }

    /// Total token count over all documents.
    pub fn total_tokens(&self) -> usize {
        self.doc_tokens.iter().map(|t| t.len()).sum()
    }

    /// Maps a selection to the set of tokens it covers. A token belongs to
    /// the set when its char range overlaps any span.
    pub fn span_to_tokens(&self, selection: &Selection) -> Result<TokenIndexSet, CoreError> {
        let mut set = TokenIndexSet::new();
        for span in selection {
            if span.doc >= self.num_docs() {
                return Err(CoreError::DocOutOfRange {
                    doc: span.doc,
                    num_docs: self.num_docs(),
                });
            }
            if span.end > self.doc_char_lens[span.doc] {
                return Err(CoreError::SpanOutOfBounds {
                    doc: span.doc,
                    end: span.end,
                    len: self.doc_char_lens[span.doc],
                });
            }
            let tokens = &self.doc_tokens[span.doc];
            // First token ending after the span starts; scan while tokens
            // still begin before the span ends.
            let lo = tokens.partition_point(|t| t.end <= span.start);
            for t in &tokens[lo..] {
                if t.start >= span.end {
                    break;
                }
                set.insert(span.doc, t.index);
            }
        }
        Ok(set)
    }

    /// Maps a token set back to spans: each maximal run of consecutive
    /// token indices becomes one span from the first token's start to the
    /// last token's end.
    pub fn tokens_to_spans(&self, set: &TokenIndexSet) -> Result<Selection, CoreError> {
        let mut spans: Vec<Span> = Vec::new();
        let mut run: Option<(usize, usize, usize)> = None; // (doc, first, last)

        let flush = |spans: &mut Vec<Span>, run: Option<(usize, usize, usize)>| {
            if let Some((doc, first, last)) = run {
                let tokens = &self.doc_tokens[doc];
                spans.push(Span::new(doc, tokens[first].start, tokens[last].end));
            }
        };

        for (doc, index) in set {
            if doc >= self.num_docs() {
                return Err(CoreError::DocOutOfRange {
                    doc,
                    num_docs: self.num_docs(),
                });
            }
            if index >= self.doc_tokens[doc].len() {
                return Err(CoreError::TokenOutOfRange {
                    doc,
                    index,
                    num_tokens: self.doc_tokens[doc].len(),
                });
            }
            run = match run {
                Some((d, first, last)) if d == doc && index == last + 1 => {
                    Some((d, first, index))
                }
                Some(prev) => {
                    flush(&mut spans, Some(prev));
                    Some((doc, index, index))
                }
                None => Some((doc, index, index)),
            };
        }
        flush(&mut spans, run);
        Selection::new(spans)
    }
}

/// Maps a selection over an instance's documents to its token set.
pub fn span_to_tokens(instance: &Instance, selection: &Selection) -> Result<TokenIndexSet, CoreError> {
    InstanceTokens::new(&instance.documents).span_to_tokens(selection)
}

/// Maps a token set over an instance's documents back to a selection.
pub fn tokens_to_spans(instance: &Instance, set: &TokenIndexSet) -> Result<Selection, CoreError> {
    InstanceTokens::new(&instance.documents).tokens_to_spans(set)
}

/// Sentence ranges of a document: the explicit ranges when present,
/// otherwise rule-based segmentation of the text.
pub fn segment_sentences(document: &Document) -> Vec<(usize, usize)> {
    match &document.sentences {
        Some(ranges) => ranges.clone(),
        None => split_sentences(&document.text),
    }
}

/// Rule-based sentence split. A sentence ends just after a `.`, `!`, or `?`
/// that is followed by whitespace or end of text; a final fragment without
/// terminal punctuation ends at its last non-whitespace char. Leading
/// whitespace is never part of a sentence.
pub fn split_sentences(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<char> = text.chars().collect();
    let n = chars.len();
    let mut ranges = Vec::new();
    let mut i = 0;
    while i < n {
        while i < n && chars[i].is_whitespace() {
            i += 1;
        }
        if i >= n {
            break;
        }
        let start = i;
        let mut end = None;
        while i < n {
            if matches!(chars[i], '.' | '!' | '?')
                && (i + 1 >= n || chars[i + 1].is_whitespace())
            {
                end = Some(i + 1);
                i += 1;
                break;
            }
            i += 1;
        }
        let end = end.unwrap_or_else(|| {
            let mut e = n;
            while e > start && chars[e - 1].is_whitespace() {
                e -= 1;
            }
            e
        });
        if end > start {
            ranges.push((start, end));
        }
    }
    ranges
}
