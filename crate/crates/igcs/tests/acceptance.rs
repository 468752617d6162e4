//! Release gate: one check per shipping criterion, each reported as a
//! single PASS/FAIL line (`harness = false`, so the output *is* the
//! report). A failing check names the criterion and carries the panic
//! message inline.
//!
//! Each check pits the library against an independently coded oracle —
//! a restated tokenizer, exact fraction arithmetic, an exhaustive
//! all-windows edit-distance search, enumerated resampling distributions —
//! or drives the compiled `igcs` binary end to end on disk fixtures.
//! Every tolerance is written into the assertion that uses it.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, set_hook, take_hook};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use igcs::backend::BackendConfig;
use igcs::prompt::{render_prompt, IclExample, PromptTemplate};
use igcs::synthesis::{merge_selections, MergeStrategy};
use igcs_core::grounding::{
    ground_span, threshold, DiscardReason, GroundingOutcome, GroundingPolicy,
};
use igcs_core::metrics::{
    bootstrap_ci, bootstrap_distribution, multi_ref_score, permutation_test, token_f1, Metric,
    TaskScores, DEFAULT_BOOTSTRAP_ITERATIONS,
};
use igcs_core::rng::stream_rng;
use igcs_core::tokenize::InstanceTokens;
use igcs_core::types::{Document, Instance, Selection, Span, TokenIndexSet};
use rand::Rng;
use serde_json::{json, Value};

fn main() {
    let checks: &[(&str, fn())] = &[
        ("token F1 matches an exact-fraction oracle", metric_oracle),
        ("grounding matches the exhaustive-window oracle", grounding_oracle),
        ("grounding laws: verbatim, over-budget, loosening", grounding_laws),
        ("merge laws: containment, round-trip, recall", merge_laws),
        ("bootstrap matches the enumerated resampling law", bootstrap_law),
        ("permutation test matches exact enumeration", permutation_exact),
        ("synthesis pipeline runs end to end through the binary", synthesis_end_to_end),
        ("prompts match goldens; decoding defaults pinned", prompt_goldens),
        ("whole-set vs per-doc comparison is exact", mode_contrast),
    ];
    set_hook(Box::new(|_| {}));
    let mut failures = 0usize;
    for (index, (name, check)) in checks.iter().enumerate() {
        let started = Instant::now();
        match catch_unwind(*check) {
            Ok(()) => println!(
                "PASS  criterion {}: {name}  ({:.2}s)",
                index + 1,
                started.elapsed().as_secs_f64()
            ),
            Err(payload) => {
                failures += 1;
                let message = panic_text(payload.as_ref()).replace('\n', " | ");
                println!("FAIL  criterion {}: {name} — {message}", index + 1);
            }
        }
    }
    drop(take_hook());
    if failures > 0 {
        eprintln!("{failures} of 9 criteria failed");
        std::process::exit(1);
    }
}

fn panic_text(payload: &(dyn std::any::Any + Send)) -> String {
    if let Some(text) = payload.downcast_ref::<&str>() {
        (*text).to_string()
    } else if let Some(text) = payload.downcast_ref::<String>() {
        text.clone()
    } else {
        "panic with a non-string payload".to_string()
    }
}

// ---------------------------------------------------------------- fixtures

/// Words for random documents. All ASCII, so tests that byte-slice their
/// own corpus stay on char boundaries.
const WORDS: &[&str] = &[
    "alpha", "bravo", "carbon", "delta", "ember", "fjord", "gully", "harbor", "indigo", "jetty",
    "krill", "lagoon", "marsh", "nickel", "onyx", "pylon",
];
const MARKS: &[char] = &['.', ',', ';', '!', '-'];

fn fixture_instance(documents: Vec<Document>, references: Vec<Selection>) -> Instance {
    Instance {
        id: "case".into(),
        task: "oracle".into(),
        instruction: "Select content".into(),
        selection_type: "text phrases".into(),
        source_type: "document(s)".into(),
        documents,
        references,
        allow_empty: true,
        metadata: BTreeMap::new(),
    }
}

/// Independent restatement of the tokenization rule: maximal runs of
/// alphanumeric characters are one token each; every other non-whitespace
/// character is its own token. Returns char-offset ranges.
fn oracle_tokenize(text: &str) -> Vec<(usize, usize)> {
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
        } else if chars[i].is_alphanumeric() {
            let start = i;
            while i < chars.len() && chars[i].is_alphanumeric() {
                i += 1;
            }
            tokens.push((start, i));
        } else {
            tokens.push((i, i + 1));
            i += 1;
        }
    }
    tokens
}

/// Case folding as the matcher defines it: lowercase only where the
/// mapping stays one character long.
fn oracle_fold(text: &str) -> String {
    text.chars()
        .map(|c| {
            let mut lower = c.to_lowercase();
            match (lower.next(), lower.next()) {
                (Some(l), None) => l,
                _ => c,
            }
        })
        .collect()
}

/// 1–`max_docs` documents of 1–`max_parts` words/marks with occasional
/// double-space and no-space joins, so token boundaries get exercised.
fn random_documents(
    rng: &mut impl Rng,
    max_docs: usize,
    max_parts: usize,
    vocab: &[&str],
) -> Vec<Document> {
    let num_docs = rng.random_range(1..=max_docs);
    (0..num_docs)
        .map(|d| {
            let parts = rng.random_range(1..=max_parts);
            let mut text = String::new();
            for part in 0..parts {
                if part > 0 {
                    match rng.random_range(0..10) {
                        0 => text.push_str("  "),
                        1 => {}
                        _ => text.push(' '),
                    }
                }
                if rng.random_range(0..5) == 0 {
                    text.push(MARKS[rng.random_range(0..MARKS.len())]);
                } else {
                    text.push_str(vocab[rng.random_range(0..vocab.len())]);
                }
            }
            Document::new(format!("d{d}"), text)
        })
        .collect()
}

/// Up to three random char spans; possibly none, to cover empty selections.
fn random_selection(rng: &mut impl Rng, documents: &[Document]) -> Selection {
    let mut spans = Vec::new();
    for _ in 0..rng.random_range(0..=3) {
        let doc = rng.random_range(0..documents.len());
        let len = documents[doc].char_len();
        let start = rng.random_range(0..len);
        let end = rng.random_range(start + 1..=len);
        spans.push(Span::new(doc, start, end));
    }
    Selection::new(spans).expect("generated spans are non-empty and in range")
}

/// The tokens a selection covers under the overlap rule, counted the slow
/// way over the restated tokenizer's output.
fn oracle_token_set(
    selection: &Selection,
    doc_tokens: &[Vec<(usize, usize)>],
) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (doc, tokens) in doc_tokens.iter().enumerate() {
        for (index, &(start, end)) in tokens.iter().enumerate() {
            let covered = selection
                .iter()
                .any(|s| s.doc == doc && s.start < end && start < s.end);
            if covered {
                out.push((doc, index));
            }
        }
    }
    out
}

// --------------------------------------------- criterion 1: metric oracle

/// Exact rational `0 / 1` with a positive denominator.
#[derive(Debug, Clone, Copy)]
struct Frac(u64, u64);

impl Frac {
    fn as_f64(self) -> f64 {
        self.0 as f64 / self.1 as f64
    }
    fn eq_exact(self, other: Frac) -> bool {
        u128::from(self.0) * u128::from(other.1) == u128::from(other.0) * u128::from(self.1)
    }
    fn gt_exact(self, other: Frac) -> bool {
        u128::from(self.0) * u128::from(other.1) > u128::from(other.0) * u128::from(self.1)
    }
}

struct FracTriple {
    precision: Frac,
    recall: Frac,
    f1: Frac,
}

/// P/R/F1 in exact fractions, restating the empty-set conventions: both
/// sides empty is a perfect score, an empty side alone scores zero.
fn oracle_triple(overlap: usize, predicted: usize, reference: usize) -> FracTriple {
    let (o, p, r) = (overlap as u64, predicted as u64, reference as u64);
    if p == 0 && r == 0 {
        return FracTriple { precision: Frac(1, 1), recall: Frac(1, 1), f1: Frac(1, 1) };
    }
    FracTriple {
        precision: if p == 0 { Frac(0, 1) } else { Frac(o, p) },
        recall: if r == 0 { Frac(0, 1) } else { Frac(o, r) },
        // For o > 0 the harmonic mean of o/p and o/r collapses to 2o/(p+r).
        f1: if o == 0 { Frac(0, 1) } else { Frac(2 * o, p + r) },
    }
}

fn assert_close(got: f64, want: Frac, what: &str, case: u64) {
    assert!(
        (got - want.as_f64()).abs() < 1e-12,
        "case {case}: {what} = {got}, oracle {}/{}",
        want.0,
        want.1
    );
}

fn metric_oracle() {
    let started = Instant::now();
    let mut vocab = WORDS.to_vec();
    vocab.push("café"); // multi-byte chars keep char-offset handling honest
    vocab.push("über");

    let mut checked = 0u64;
    for case in 0..1_200u64 {
        let mut rng = stream_rng(42, "acceptance:metrics", case);
        let documents = random_documents(&mut rng, 3, 10, &vocab);
        let doc_tokens: Vec<Vec<(usize, usize)>> =
            documents.iter().map(|d| oracle_tokenize(&d.text)).collect();
        let total: usize = doc_tokens.iter().map(Vec::len).sum();
        assert!(total <= 30, "case {case}: fixture grew past 30 tokens");

        let tokens = InstanceTokens::new(&documents);
        let predicted = random_selection(&mut rng, &documents);
        let references: Vec<Selection> = (0..rng.random_range(1..=3))
            .map(|_| random_selection(&mut rng, &documents))
            .collect();

        // Token sets must agree with the restated overlap rule.
        let predicted_oracle = oracle_token_set(&predicted, &doc_tokens);
        let got: Vec<(usize, usize)> =
            tokens.span_to_tokens(&predicted).unwrap().iter().collect();
        assert_eq!(got, predicted_oracle, "case {case}: predicted token set");

        // Each reference's triple, with the overlap counted by brute force.
        let mut f1s = Vec::new();
        for (ri, reference) in references.iter().enumerate() {
            let reference_oracle = oracle_token_set(reference, &doc_tokens);
            let got: Vec<(usize, usize)> =
                tokens.span_to_tokens(reference).unwrap().iter().collect();
            assert_eq!(got, reference_oracle, "case {case}: reference {ri} token set");

            let overlap = predicted_oracle
                .iter()
                .filter(|t| reference_oracle.contains(t))
                .count();
            let want = oracle_triple(overlap, predicted_oracle.len(), reference_oracle.len());
            let predicted_set: TokenIndexSet = predicted_oracle.iter().copied().collect();
            let reference_set: TokenIndexSet = reference_oracle.iter().copied().collect();
            let triple = token_f1(&predicted_set, &reference_set);
            assert_close(triple.precision, want.precision, "precision", case);
            assert_close(triple.recall, want.recall, "recall", case);
            assert_close(triple.f1, want.f1, "f1", case);
            f1s.push(want.f1);
        }

        // The multi-reference rule: best F1, earliest reference on ties.
        let instance = fixture_instance(documents.clone(), references.clone());
        let (best, chosen) = multi_ref_score(&predicted, &instance, Metric::TokenF1).unwrap();
        let top = f1s
            .iter()
            .copied()
            .reduce(|a, b| if b.gt_exact(a) { b } else { a })
            .unwrap();
        assert_close(best.f1, top, "max f1", case);
        let tied: Vec<usize> = f1s
            .iter()
            .enumerate()
            .filter(|(_, f)| f.eq_exact(top))
            .map(|(i, _)| i)
            .collect();
        assert!(
            tied.contains(&chosen),
            "case {case}: chose reference {chosen}, tied best are {tied:?}"
        );
        checked += 1;
    }
    assert!(checked >= 1_000, "only {checked} instances checked");

    // Identical references produce identical floats, so the earliest index
    // must win outright.
    let documents = vec![Document::new("d0", "alpha bravo carbon delta ember")];
    let reference = Selection::new(vec![Span::new(0, 0, 11)]).unwrap();
    let predicted = Selection::new(vec![Span::new(0, 0, 17)]).unwrap();
    let instance = fixture_instance(documents, vec![reference.clone(), reference]);
    let (_, chosen) = multi_ref_score(&predicted, &instance, Metric::TokenF1).unwrap();
    assert_eq!(chosen, 0, "tied references must resolve to the first");

    let elapsed = started.elapsed();
    assert!(elapsed < Duration::from_secs(10), "metric oracle took {elapsed:?}");
}

// ------------------------------------------ criterion 2: grounding oracle

/// ASCII corpus of words (occasionally uppercased) and comma tokens,
/// single-space separated.
fn grounding_corpus(rng: &mut impl Rng, min_words: usize, max_words: usize) -> String {
    let mut parts = Vec::new();
    for _ in 0..rng.random_range(min_words..=max_words) {
        let word = WORDS[rng.random_range(0..WORDS.len())];
        if rng.random_range(0..8) == 0 {
            parts.push(word.to_ascii_uppercase());
        } else {
            parts.push(word.to_string());
        }
        if rng.random_range(0..6) == 0 {
            parts.push(",".to_string());
        }
    }
    parts.join(" ")
}

/// A window of up to `max_tokens` source tokens with up to `max_edits`
/// random token edits, sometimes case-flipped or double-spaced (the latter
/// defeats substring search while staying at token distance 0).
fn edited_window(rng: &mut impl Rng, text: &str, max_tokens: usize, max_edits: usize) -> String {
    let src = oracle_tokenize(text);
    let m = rng.random_range(1..=max_tokens.min(src.len()));
    let at = rng.random_range(0..=src.len() - m);
    let mut words: Vec<String> = src[at..at + m]
        .iter()
        .map(|&(s, e)| text[s..e].to_string())
        .collect();
    for _ in 0..rng.random_range(0..=max_edits) {
        if words.is_empty() {
            break;
        }
        let word = WORDS[rng.random_range(0..WORDS.len())].to_string();
        match rng.random_range(0..3u8) {
            0 => {
                let i = rng.random_range(0..words.len());
                words[i] = word;
            }
            1 => {
                let i = rng.random_range(0..words.len());
                words.remove(i);
            }
            _ => {
                let i = rng.random_range(0..=words.len());
                words.insert(i, word);
            }
        }
    }
    if rng.random_range(0..6) == 0 {
        for word in &mut words {
            *word = word.to_ascii_uppercase();
        }
    }
    let separator = if rng.random_range(0..8) == 0 { "  " } else { " " };
    words.join(separator)
}

/// Token-level Levenshtein with the full DP table — no banding, no early
/// exit. Tokens are pre-interned to ids.
fn slow_levenshtein(a: &[u32], b: &[u32]) -> usize {
    let mut dp = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for (i, row) in dp.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in dp[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            let substitute = dp[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
            dp[i][j] = substitute.min(dp[i - 1][j] + 1).min(dp[i][j - 1] + 1);
        }
    }
    dp[a.len()][b.len()]
}

fn intern(table: &mut BTreeMap<String, u32>, token: String) -> u32 {
    let next = table.len() as u32;
    *table.entry(token).or_insert(next)
}

/// The grounding contract, restated: trim; fold-insensitive exact substring
/// at its first occurrence; otherwise the best window over *every* source
/// window, ranked by (distance, start, end), within an integer edit budget
/// of min(3m/20, cap) — the default ratio 0.15 expressed without floats.
fn oracle_ground(query: &str, text: &str, cap: usize) -> (GroundingOutcome, Option<(usize, usize)>) {
    let trimmed = query.trim();
    if trimmed.is_empty() {
        return (GroundingOutcome::Discarded(DiscardReason::Empty), None);
    }
    let hay = oracle_fold(text);
    let needle = oracle_fold(trimmed);
    if let Some(at) = hay.find(&needle) {
        let start = hay[..at].chars().count();
        return (
            GroundingOutcome::Exact,
            Some((start, start + needle.chars().count())),
        );
    }
    let mut table = BTreeMap::new();
    let query_ids: Vec<u32> = oracle_tokenize(trimmed)
        .iter()
        .map(|&(s, e)| intern(&mut table, oracle_fold(&trimmed[s..e])))
        .collect();
    let budget = (3 * query_ids.len() / 20).min(cap);
    if budget == 0 {
        return (GroundingOutcome::Discarded(DiscardReason::NoMatch), None);
    }
    let src = oracle_tokenize(text);
    let source_ids: Vec<u32> = src
        .iter()
        .map(|&(s, e)| intern(&mut table, oracle_fold(&text[s..e])))
        .collect();
    let mut best: Option<(usize, usize, usize)> = None;
    for start in 0..source_ids.len() {
        for len in 1..=source_ids.len() - start {
            let distance = slow_levenshtein(&query_ids, &source_ids[start..start + len]);
            if distance <= budget {
                let candidate = (distance, src[start].0, src[start + len - 1].1);
                if best.is_none_or(|b| candidate < b) {
                    best = Some(candidate);
                }
            }
        }
    }
    match best {
        None => (GroundingOutcome::Discarded(DiscardReason::NoMatch), None),
        Some((0, start, end)) => (GroundingOutcome::Exact, Some((start, end))),
        Some((distance, start, end)) => (GroundingOutcome::Fuzzy(distance), Some((start, end))),
    }
}

fn grounding_oracle() {
    let policy = GroundingPolicy::default();
    assert_eq!(
        (policy.ratio, policy.cap),
        (0.15, 10),
        "default policy drifted"
    );
    // The edit-budget table at the default ratio, in pure integer
    // arithmetic: floor(0.15 · m) capped at 10.
    for m in 1..=200usize {
        assert_eq!(threshold(&policy, m), (3 * m / 20).min(10), "budget at m = {m}");
    }

    let mut compared = 0u64;
    for case in 0..700u64 {
        let mut rng = stream_rng(43, "acceptance:grounding", case);
        let text = grounding_corpus(&mut rng, 25, 40);
        assert!(text.is_ascii());
        let query = edited_window(&mut rng, &text, 12, 3);
        if query.trim().is_empty() {
            continue;
        }
        let document = Document::new("d0", text.clone());
        let got = ground_span(&query, &document, &policy);
        let (outcome, span) = oracle_ground(&query, &text, policy.cap);
        assert_eq!(got.outcome, outcome, "case {case}: {query:?} against {text:?}");
        assert_eq!(
            got.span.map(|s| (s.start, s.end)),
            span,
            "case {case}: span for {query:?}"
        );
        compared += 1;
    }
    assert!(compared >= 500, "only {compared} grounding cases compared");
}

// -------------------------------------------- criterion 3: grounding laws

fn grounding_laws() {
    let policy = GroundingPolicy::default();
    let ratio_ladder = [
        GroundingPolicy { ratio: 0.0, cap: 10 },
        GroundingPolicy { ratio: 0.05, cap: 10 },
        GroundingPolicy { ratio: 0.15, cap: 10 },
        GroundingPolicy { ratio: 0.5, cap: 10 },
        GroundingPolicy { ratio: 1.0, cap: 10 },
    ];
    let cap_ladder = [
        GroundingPolicy { ratio: 0.3, cap: 0 },
        GroundingPolicy { ratio: 0.3, cap: 1 },
        GroundingPolicy { ratio: 0.3, cap: 3 },
        GroundingPolicy { ratio: 0.3, cap: 10 },
    ];

    let (mut verbatim, mut discarded) = (0u64, 0u64);
    for case in 0..400u64 {
        let mut rng = stream_rng(45, "acceptance:grounding-laws", case);
        let text = grounding_corpus(&mut rng, 20, 50);
        assert!(text.is_ascii());
        let document = Document::new("d0", text.clone());

        // Any verbatim substring grounds exactly, at its first occurrence.
        let qs = rng.random_range(0..text.len());
        let qe = rng.random_range(qs + 1..=text.len());
        let verbatim_query = &text[qs..qe];
        if !verbatim_query.trim().is_empty() {
            let got = ground_span(verbatim_query, &document, &policy);
            assert_eq!(
                got.outcome,
                GroundingOutcome::Exact,
                "case {case}: verbatim {verbatim_query:?}"
            );
            let span = got.span.expect("exact match carries a span");
            let needle = oracle_fold(verbatim_query.trim());
            let first = oracle_fold(&text)
                .find(&needle)
                .expect("the substring must be findable");
            assert_eq!(
                (span.start, span.end),
                (first, first + needle.len()),
                "case {case}: exact match must land on the first occurrence"
            );
            verbatim += 1;
        }

        // A query with more unmatchable tokens than the budget is discarded:
        // each out-of-corpus token forces at least one distinct edit against
        // any window, so every window distance exceeds the budget.
        let src = oracle_tokenize(&text);
        let limit = 10usize.min(src.len());
        let m = rng.random_range(1..=limit);
        let at = rng.random_range(0..=src.len() - m);
        let mut words: Vec<String> = src[at..at + m]
            .iter()
            .map(|&(s, e)| text[s..e].to_string())
            .collect();
        let budget = (3 * m / 20).min(policy.cap);
        for (i, word) in words.iter_mut().take(budget + 1).enumerate() {
            *word = format!("zzqx{i}");
        }
        let query = words.join(" ");
        let got = ground_span(&query, &document, &policy);
        assert_eq!(
            got.outcome,
            GroundingOutcome::Discarded(DiscardReason::NoMatch),
            "case {case}: {query:?} must be out of budget (budget {budget})"
        );
        discarded += 1;

        // Loosening the policy never breaks a grounding and never worsens
        // its distance. Zero violations allowed.
        let probe = edited_window(&mut rng, &text, 10, 2);
        if probe.trim().is_empty() {
            continue;
        }
        for ladder in [&ratio_ladder[..], &cap_ladder[..]] {
            let mut grounded_at: Option<usize> = None;
            for step in ladder {
                let result = ground_span(&probe, &document, step);
                if let Some(before) = grounded_at {
                    let now = result.distance().unwrap_or_else(|| {
                        panic!(
                            "case {case}: {probe:?} grounded under a tighter policy \
                             but not under {step:?}"
                        )
                    });
                    assert!(
                        now <= before,
                        "case {case}: distance grew from {before} to {now} \
                         when loosening to {step:?}"
                    );
                }
                if result.is_grounded() {
                    grounded_at = result.distance();
                }
            }
        }
    }
    assert!(verbatim >= 300, "only {verbatim} verbatim probes ran");
    assert!(discarded >= 300, "only {discarded} over-budget probes ran");
}

// ------------------------------------------------ criterion 4: merge laws

fn merge_laws() {
    let (mut triples, mut recall_checks) = (0u64, 0u64);
    for case in 0..250u64 {
        let mut rng = stream_rng(46, "acceptance:merging", case);
        let documents = random_documents(&mut rng, 2, 12, WORDS);
        let set = fixture_instance(documents.clone(), vec![]);
        let tokens = InstanceTokens::new(&documents);
        let annotations: Vec<Selection> = (0..3)
            .map(|_| random_selection(&mut rng, &documents))
            .collect();

        let union = merge_selections(&annotations, &set, MergeStrategy::Union).unwrap();
        let union_tokens = tokens.span_to_tokens(&union).unwrap();
        for agreement in [None, Some(2), Some(3)] {
            let majority = merge_selections(
                &annotations,
                &set,
                MergeStrategy::Majority { threshold: agreement },
            )
            .unwrap();
            let majority_tokens = tokens.span_to_tokens(&majority).unwrap();
            assert!(
                majority_tokens.is_subset(&union_tokens),
                "case {case}: majority (threshold {agreement:?}) escaped the union"
            );

            // Dropping tokens can only lose recall against a fixed,
            // non-empty reference.
            let reference = random_selection(&mut rng, &documents);
            let reference_tokens = tokens.span_to_tokens(&reference).unwrap();
            if reference_tokens.is_empty() {
                continue;
            }
            let union_recall = token_f1(&union_tokens, &reference_tokens).recall;
            let majority_recall = token_f1(&majority_tokens, &reference_tokens).recall;
            assert!(
                union_recall >= majority_recall,
                "case {case}: union recall {union_recall} < majority recall {majority_recall}"
            );
            recall_checks += 1;
        }

        // Token set → spans → token set is the identity.
        let sample: TokenIndexSet = (0..documents.len())
            .flat_map(|doc| (0..tokens.doc(doc).len()).map(move |i| (doc, i)))
            .filter(|_| rng.random::<bool>())
            .collect();
        let spans = tokens.tokens_to_spans(&sample).unwrap();
        let back = tokens.span_to_tokens(&spans).unwrap();
        assert_eq!(back, sample, "case {case}: token round-trip drifted");
        triples += 1;
    }
    assert!(triples >= 200, "only {triples} annotation triples ran");
    assert!(recall_checks >= 50, "only {recall_checks} recall comparisons ran");
}

// --------------------------------------------- criterion 5: bootstrap law

fn bootstrap_law() {
    assert_eq!(DEFAULT_BOOTSTRAP_ITERATIONS, 10_000);
    let tasks = vec![TaskScores { task: "t0".into(), scores: vec![0.0, 1.0] }];

    // Enumerate the 2² equally likely resamples of two scores: the mean is
    // 0 with probability 1/4, 1/2 with 1/2, and 1 with 1/4.
    let mut exact: BTreeMap<u64, f64> = BTreeMap::new();
    for i in 0..2usize {
        for j in 0..2usize {
            let mean = (tasks[0].scores[i] + tasks[0].scores[j]) / 2.0;
            *exact.entry(mean.to_bits()).or_insert(0.0) += 0.25;
        }
    }
    assert_eq!(exact.len(), 3);
    assert_eq!(exact[&0.0f64.to_bits()], 0.25);
    assert_eq!(exact[&0.5f64.to_bits()], 0.5);
    assert_eq!(exact[&1.0f64.to_bits()], 0.25);

    let sample = bootstrap_distribution(&tasks, DEFAULT_BOOTSTRAP_ITERATIONS, 11);
    assert_eq!(sample.len(), DEFAULT_BOOTSTRAP_ITERATIONS);
    let mut seen: BTreeMap<u64, f64> = BTreeMap::new();
    for value in &sample {
        *seen.entry(value.to_bits()).or_insert(0.0) += 1.0 / sample.len() as f64;
    }
    for (&bits, &frequency) in &seen {
        let value = f64::from_bits(bits);
        let expected = *exact
            .get(&bits)
            .unwrap_or_else(|| panic!("resampled mean {value} is outside the support"));
        assert!(
            (frequency - expected).abs() <= 0.02,
            "mean {value}: frequency {frequency:.4} vs analytic {expected}"
        );
    }
    assert_eq!(seen.len(), 3, "all three support points must appear");

    // A quarter of the mass sits on each extreme, so the 95% percentile
    // interval must reach both exactly.
    let interval = bootstrap_ci(&tasks, DEFAULT_BOOTSTRAP_ITERATIONS, 0.05, 11);
    assert_eq!(interval, (0.0, 1.0));

    // Same-seed reruns are bit-identical; a different seed is not.
    let again = bootstrap_distribution(&tasks, DEFAULT_BOOTSTRAP_ITERATIONS, 11);
    assert!(
        sample
            .iter()
            .map(|v| v.to_bits())
            .eq(again.iter().map(|v| v.to_bits())),
        "same-seed reruns must be bit-identical"
    );
    assert_eq!(bootstrap_ci(&tasks, DEFAULT_BOOTSTRAP_ITERATIONS, 0.05, 11), interval);
    assert_ne!(
        bootstrap_distribution(&tasks, 64, 11),
        bootstrap_distribution(&tasks, 64, 12),
        "different seeds must draw differently"
    );

    // 1,000 instance scores across 10 tasks at the default iteration count
    // stays inside the time budget.
    let large: Vec<TaskScores> = (0..10)
        .map(|t| TaskScores {
            task: format!("t{t}"),
            scores: (0..100).map(|i| f64::from(i) / 99.0).collect(),
        })
        .collect();
    let started = Instant::now();
    let (low, high) = bootstrap_ci(&large, DEFAULT_BOOTSTRAP_ITERATIONS, 0.05, 3);
    let elapsed = started.elapsed();
    assert!((0.0..=1.0).contains(&low) && low <= high && high <= 1.0);
    assert!(elapsed < Duration::from_secs(30), "bootstrap took {elapsed:?}");
}

// ------------------------------------- criterion 6: permutation exactness

fn permutation_exact() {
    // Quarter-grid scores keep every signed sum exact in binary floating
    // point, so enumerating the 2ⁿ sign masks has no boundary ambiguity.
    fn exact_p(a: &[f64], b: &[f64]) -> f64 {
        let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let observed = diffs.iter().sum::<f64>().abs();
        let mut hits = 0u64;
        let total = 1u64 << diffs.len();
        for mask in 0..total {
            let sum: f64 = diffs
                .iter()
                .enumerate()
                .map(|(i, &d)| if mask >> i & 1 == 1 { d } else { -d })
                .sum();
            if sum.abs() >= observed {
                hits += 1;
            }
        }
        hits as f64 / total as f64
    }

    let cases: Vec<(Vec<f64>, Vec<f64>)> = vec![
        // One-sided gap: only the two all-same-sign assignments reach the
        // observed statistic, so p = 2/2⁸.
        (
            vec![1.0, 0.75, 1.0, 0.5, 1.0, 0.75, 1.0, 0.75],
            vec![0.25, 0.0, 0.5, 0.0, 0.25, 0.5, 0.0, 0.25],
        ),
        // Mixed signs at n = 10, moderate p.
        (
            vec![0.75, 0.5, 1.0, 0.25, 0.5, 0.75, 0.25, 0.5, 1.0, 0.5],
            vec![0.5, 0.75, 0.75, 0.5, 0.25, 0.5, 0.5, 0.25, 0.75, 0.75],
        ),
        // Perfectly cancelling diffs: the observed statistic is 0, p = 1.
        (vec![0.5, 0.75, 0.25, 1.0], vec![0.75, 0.5, 1.0, 0.25]),
        // Small n, mild effect.
        (
            vec![1.0, 0.5, 0.75, 0.5, 0.25, 0.75],
            vec![0.75, 0.75, 0.5, 0.25, 0.5, 0.5],
        ),
    ];
    for (i, (a, b)) in cases.iter().enumerate() {
        assert!(a.len() <= 10);
        let exact = exact_p(a, b);
        let estimate = permutation_test(a, b, 1_000, 17).unwrap();
        assert!(
            (estimate - exact).abs() <= 0.02,
            "case {i}: estimate {estimate:.4} vs exact {exact:.4}"
        );
    }

    // Identical inputs: every signed sum ties the observed 0, and the
    // add-one estimator returns exactly 1.
    let scores = [0.25, 0.5, 0.75, 1.0, 0.0, 0.5];
    assert_eq!(permutation_test(&scores, &scores, 1_000, 17).unwrap(), 1.0);
    assert_eq!(permutation_test(&scores, &scores, 1_000, 99).unwrap(), 1.0);
}

// ----------------------------------------------------- binary test helpers

fn igcs_binary(dir: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_igcs"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("failed to launch the igcs binary")
}

fn run_ok(dir: &Path, args: &[&str]) -> String {
    let out = igcs_binary(dir, args);
    assert!(
        out.status.success(),
        "igcs {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("stdout is utf-8")
}

fn write_file(path: &Path, content: &str) {
    std::fs::write(path, content).expect("fixture write");
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).expect("report file exists"))
        .expect("report parses as JSON")
}

// ------------------------------------ criterion 7: synthesis end to end

fn synthesis_end_to_end() {
    let dir = tempfile::tempdir().expect("create temp dir");
    let root = dir.path();

    // Ten sets of two two-sentence documents. Instruction slot j targets
    // one sentence: doc j % 2, sentence (j / 2) % 2.
    let doc_text = |k: usize, doc: usize| -> String {
        if doc == 0 {
            format!("Alpha {k} zero report. Gamma {k} zero summary.")
        } else {
            format!("Beta {k} one report. Delta {k} one summary.")
        }
    };
    let target = |k: usize, slot: usize| -> (usize, String) {
        let doc = slot % 2;
        let second = (slot / 2) % 2 == 1;
        let name = match (doc, second) {
            (0, false) => "Alpha",
            (0, true) => "Gamma",
            (1, false) => "Beta",
            _ => "Delta",
        };
        let pos = if doc == 0 { "zero" } else { "one" };
        let kind = if second { "summary" } else { "report" };
        (doc, format!("{name} {k} {pos} {kind}."))
    };

    let sets: Vec<String> = (0..10)
        .map(|k| {
            json!({
                "id": format!("s{k}"),
                "task": "selection",
                "instruction": "",
                "selection_type": "text phrases",
                "source_type": "document(s)",
                "allow_empty": true,
                "documents": [
                    {"id": "d0", "text": doc_text(k, 0)},
                    {"id": "d1", "text": doc_text(k, 1)},
                ],
                "references": [],
            })
            .to_string()
        })
        .collect();
    write_file(&root.join("sets.jsonl"), &(sets.join("\n") + "\n"));

    // Annotator A doubles as the instruction generator. Set s9's generator
    // response carries no numbered list (5 discards); set s8's second
    // annotator garbles its third entry (1 discard).
    let mut responses_a = serde_json::Map::new();
    let mut responses_b = serde_json::Map::new();
    for k in 0..10usize {
        let generated = if k == 9 {
            "no numbered list today".to_string()
        } else {
            (1..=5)
                .map(|j| format!("{j}. Select content for slot {j}"))
                .collect::<Vec<_>>()
                .join("\n")
        };
        responses_a.insert(format!("s{k}::instructions"), Value::String(generated));

        let entries: Vec<Value> = (0..5).map(|slot| json!([target(k, slot).1])).collect();
        responses_a.insert(
            format!("s{k}::selections"),
            Value::String(Value::Array(entries.clone()).to_string()),
        );
        let mut entries_b = entries;
        if k == 8 {
            entries_b[2] = json!("not a list");
        }
        responses_b.insert(
            format!("s{k}::selections"),
            Value::String(Value::Array(entries_b).to_string()),
        );
    }
    let config = json!({
        "instructions_per_set": 5,
        "empty_target_fraction": 0.0,
        "retries": 0,
        "annotators": [
            {"kind": "scripted", "responses": responses_a},
            {"kind": "scripted", "responses": responses_b},
        ],
    });
    write_file(&root.join("synth.json"), &config.to_string());

    let stdout = run_ok(
        root,
        &[
            "synthesize",
            "--sets",
            "sets.jsonl",
            "--config",
            "synth.json",
            "--out-union",
            "union.jsonl",
            "--out-majority",
            "majority.jsonl",
            "--audit",
            "audit.jsonl",
        ],
    );
    assert!(
        stdout.contains("sets: 10  candidates: 50  valid: 44  discarded: 6  empty-target sets: 0"),
        "accounting line missing or wrong:\n{stdout}"
    );

    // Identical annotators make union and majority agree byte for byte.
    let union_bytes = std::fs::read(root.join("union.jsonl")).unwrap();
    let majority_bytes = std::fs::read(root.join("majority.jsonl")).unwrap();
    assert_eq!(union_bytes, majority_bytes, "merge strategies diverged");

    // Exactly the 44 valid candidates survive, in set × slot order.
    let union_text = String::from_utf8(union_bytes).unwrap();
    let ids: Vec<String> = union_text
        .lines()
        .map(|line| {
            serde_json::from_str::<Value>(line).unwrap()["id"]
                .as_str()
                .unwrap()
                .to_string()
        })
        .collect();
    let expected: Vec<String> = (0..9)
        .flat_map(|k| (0..5).map(move |j| format!("s{k}.{j}")))
        .filter(|id| id != "s8.2")
        .collect();
    assert_eq!(ids, expected);

    // The audit keeps one row per candidate, with reasons for discards.
    let audit = std::fs::read_to_string(root.join("audit.jsonl")).unwrap();
    let rows: Vec<Value> = audit
        .lines()
        .map(|line| serde_json::from_str(line).unwrap())
        .collect();
    assert_eq!(rows.len(), 50);
    let valid = rows.iter().filter(|r| r["status"] == json!("valid")).count();
    assert_eq!(valid, 44);
    let generation_failures = rows
        .iter()
        .filter(|r| {
            r["reason"]
                .as_str()
                .is_some_and(|m| m.contains("instruction generation failed"))
        })
        .count();
    assert_eq!(generation_failures, 5);
    assert!(
        rows.iter().any(|r| {
            r["reason"].as_str().is_some_and(|m| m.contains("annotator 1"))
        }),
        "the garbled entry must name the annotator"
    );

    // Per-doc inference over the synthesized dataset, scripted to answer
    // each document with exactly the target sentence (or nothing).
    let mut oracle = serde_json::Map::new();
    for k in 0..9usize {
        for slot in 0..5usize {
            if k == 8 && slot == 2 {
                continue;
            }
            let (doc, sentence) = target(k, slot);
            let answer = json!([sentence]).to_string();
            for d in 0..2usize {
                let response = if d == doc { answer.clone() } else { "[]".to_string() };
                oracle.insert(format!("s{k}.{slot}::d{d}"), Value::String(response));
            }
        }
    }
    write_file(
        &root.join("backend.json"),
        &json!({"kind": "scripted", "responses": oracle}).to_string(),
    );
    run_ok(
        root,
        &[
            "infer",
            "--dataset",
            "union.jsonl",
            "--backend",
            "backend.json",
            "--mode",
            "per-doc",
            "--out",
            "predictions.jsonl",
        ],
    );
    let stdout = run_ok(
        root,
        &[
            "evaluate",
            "--dataset",
            "union.jsonl",
            "--predictions",
            "predictions.jsonl",
            "--out",
            "report.json",
        ],
    );
    assert!(stdout.contains("1.0000"), "evaluation table:\n{stdout}");
    let report = read_json(&root.join("report.json"));
    assert_eq!(report["results"]["overall"]["precision"], json!(1.0));
    assert_eq!(report["results"]["overall"]["recall"], json!(1.0));
    assert_eq!(report["results"]["overall"]["f1"], json!(1.0));
    assert_eq!(report["results"]["tasks"]["selection"]["n"], json!(44));
    let instances = report["results"]["tasks"]["selection"]["instances"]
        .as_array()
        .unwrap();
    assert_eq!(instances.len(), 44);
    assert!(instances.iter().all(|i| i["f1"] == json!(1.0)));
}

// -------------------------------------------- criterion 8: prompt goldens

fn prompt_goldens() {
    let golden = |name: &str| -> String {
        let path = Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("tests/golden")
            .join(name);
        std::fs::read_to_string(&path)
            .unwrap_or_else(|e| panic!("missing golden file {}: {e}", path.display()))
    };
    let instance = Instance {
        id: "sel-042".into(),
        task: "aspect-news".into(),
        instruction: "Select the phrases describing the harbor's redevelopment".into(),
        selection_type: "text phrases".into(),
        source_type: "document(s)".into(),
        documents: vec![
            Document::new(
                "d0",
                "The harbor district reopened in May. Cranes still line the north quay.",
            ),
            Document::new("d1", "Planners approved a second ferry terminal last month."),
        ],
        references: vec![],
        allow_empty: true,
        metadata: BTreeMap::new(),
    };

    let zero_shot = render_prompt(&instance, &PromptTemplate::default(), None).unwrap();
    assert_eq!(zero_shot, golden("zero_shot_prompt.txt"), "zero-shot prompt drifted");

    let template = PromptTemplate {
        icl: vec![
            IclExample {
                instruction: "Select the phrases naming a date".into(),
                documents: vec!["The bridge closed on 12 March for repairs.".into()],
                payload: vec!["12 March".into()],
            },
            IclExample {
                instruction: "Select the phrases about ticket prices".into(),
                documents: vec![
                    "Adult fares rose to nine euros.".into(),
                    "The museum stayed free on Sundays.".into(),
                ],
                payload: vec!["nine euros".into()],
            },
        ],
        ..PromptTemplate::default()
    };
    let two_shot = render_prompt(&instance, &template, None).unwrap();
    assert_eq!(two_shot, golden("two_shot_prompt.txt"), "two-shot prompt drifted");

    // The sentences the output format depends on, verbatim.
    assert!(zero_shot.contains("as a valid json array of strings"));
    assert!(two_shot.contains("as a valid json array of strings"));
    assert!(two_shot.contains("\u{2014} END OF EXAMPLES \u{2014}"));

    // Decoding defaults: greedy, with a 2048-token output budget.
    let config: BackendConfig = toml::from_str("kind = \"scripted\"").unwrap();
    assert_eq!(config.temperature, 0.0);
    assert_eq!(config.max_new_tokens, 2048);
}

// ------------------------------------------- criterion 9: mode comparison

fn mode_contrast() {
    let dir = tempfile::tempdir().expect("create temp dir");
    let root = dir.path();

    let words0 = [
        "alpha", "bravo", "charlie", "delta", "echo", "foxtrot", "golf", "hotel", "india",
        "juliet", "kilo", "lima", "mike", "november", "oscar", "papa", "quebec", "romeo",
        "sierra", "tango", "uniform", "victor", "whiskey", "xray",
    ];
    let words1 = [
        "yankee", "zulu", "one", "two", "three", "four", "five", "six", "seven", "eight", "nine",
        "ten", "eleven", "twelve", "thirteen", "fourteen",
    ];
    let doc0 = words0.join(" ");
    let doc1 = words1.join(" ");
    let find = |text: &str, word: &str| text.find(word).expect("word present");

    // Reference 0: the first 8 tokens of doc 0. Reference 1: the last 12
    // tokens of doc 0 plus the first 8 of doc 1 (20 total).
    let ref0 = json!([{
        "doc": 0,
        "start": find(&doc0, "alpha"),
        "end": find(&doc0, "hotel") + "hotel".len(),
    }]);
    let ref1 = json!([
        {"doc": 0, "start": find(&doc0, "mike"), "end": find(&doc0, "xray") + "xray".len()},
        {"doc": 1, "start": find(&doc1, "yankee"), "end": find(&doc1, "six") + "six".len()},
    ]);

    // Whole-set: 8 predicted tokens sharing 4 with the 8-token reference 0
    // → P = R = F1 = 1/2. Per-doc: 20 predicted tokens sharing 15 with the
    // 20-token reference 1 → 3/4. All dyadic, so the floats are exact and
    // the deltas must come out as precisely 0.25 and 12 tokens.
    let whole = words0[4..=11].join(" "); // echo … lima
    let per_doc0 = words0[7..=23].join(" "); // hotel … xray
    let per_doc1 = words1[0..=2].join(" "); // yankee zulu one

    let instance = json!({
        "id": "mx0",
        "task": "contrast",
        "instruction": "Select content that distinguishes the two documents",
        "selection_type": "text phrases",
        "source_type": "document(s)",
        "allow_empty": false,
        "documents": [{"id": "d0", "text": doc0}, {"id": "d1", "text": doc1}],
        "references": [ref0, ref1],
    });
    write_file(&root.join("dataset.jsonl"), &(instance.to_string() + "\n"));
    let backend = json!({
        "kind": "scripted",
        "responses": {
            "mx0": json!([whole]).to_string(),
            "mx0::d0": json!([per_doc0]).to_string(),
            "mx0::d1": json!([per_doc1]).to_string(),
        },
    });
    write_file(&root.join("backend.json"), &backend.to_string());

    let stdout = run_ok(
        root,
        &[
            "compare-modes",
            "--dataset",
            "dataset.jsonl",
            "--backend",
            "backend.json",
            "--out",
            "comparison.json",
        ],
    );
    assert!(stdout.contains("+0.2500"), "score delta column:\n{stdout}");
    assert!(stdout.contains("+12.00"), "token delta column:\n{stdout}");

    let report = read_json(&root.join("comparison.json"));
    for row in [&report["results"]["tasks"][0], &report["results"]["overall"]] {
        assert_eq!(row["n"], json!(1));
        assert_eq!(row["score"], json!(0.5));
        assert_eq!(row["delta_score"], json!(0.25));
        assert_eq!(row["sel_tokens"], json!(8.0));
        assert_eq!(row["delta_sel_tokens"], json!(12.0));
    }
    assert_eq!(report["results"]["tasks"][0]["task"], json!("contrast"));
    assert_eq!(report["results"]["overall"]["task"], json!("overall"));
}
