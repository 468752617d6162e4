//! Token-level evaluation: precision/recall/F1 scoring against multiple
//! references, task and benchmark aggregation, bootstrap confidence
//! intervals, a paired permutation test, and inter-annotator agreement.

use alloc::collections::btree_map::BTreeMap;
use alloc::collections::btree_set::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;

use crate::rng::stream_rng;
use crate::tokenize::{segment_sentences, tokenize, InstanceTokens};
use crate::types::{char_slice, CoreError, Instance, Selection, TokenIndexSet};

/// Bootstrap iteration count used when the caller does not choose one.
pub const DEFAULT_BOOTSTRAP_ITERATIONS: usize = 10_000;

/// Absolute value without relying on `std` float intrinsics.
fn fabs(x: f64) -> f64 {
    if x < 0.0 {
        -x
    } else {
        x
    }
}

/// Precision, recall, and F1 of one comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreTriple {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl ScoreTriple {
    /// Builds a triple from overlap counts. Both sides empty scores
    /// (1, 1, 1) — predicting nothing when nothing should be selected is
    /// perfect — while one-sided emptiness scores (0, 0, 0).
    pub fn from_counts(overlap: usize, pred: usize, reference: usize) -> Self {
        if pred == 0 && reference == 0 {
            return ScoreTriple {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0,
            };
        }
        let precision = if pred == 0 {
            0.0
        } else {
            overlap as f64 / pred as f64
        };
        let recall = if reference == 0 {
            0.0
        } else {
            overlap as f64 / reference as f64
        };
        ScoreTriple {
            precision,
            recall,
            f1: f1_of(precision, recall),
        }
    }

    pub const ZERO: ScoreTriple = ScoreTriple {
        precision: 0.0,
        recall: 0.0,
        f1: 0.0,
    };
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1_of(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Token-level precision/recall/F1 between two token sets.
pub fn token_f1(pred: &TokenIndexSet, reference: &TokenIndexSet) -> ScoreTriple {
    ScoreTriple::from_counts(
        pred.intersection_len(reference),
        pred.len(),
        reference.len(),
    )
}

/// The evaluation metric to score a prediction with.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// Set F1 over `(doc, token)` indices — the primary metric.
    TokenF1,
    /// Set F1 over the sentences containing the selected tokens, averaged
    /// per instance.
    SentenceF1,
    /// Sentence F1 pooled over a whole task: counts are summed before the
    /// triple is computed.
    SentenceF1Micro,
    /// Bigram-overlap F1 over the selected texts.
    Rouge2,
}

/// Overlap, prediction size, reference size — the counts behind a triple.
type Counts = (usize, usize, usize);

/// Pre-computed per-instance state shared by every reference comparison.
struct EvalContext<'a> {
    instance: &'a Instance,
    tokens: InstanceTokens,
    /// Sentence ranges per document, built only for sentence metrics.
    sentences: Option<Vec<Vec<(usize, usize)>>>,
}

impl<'a> EvalContext<'a> {
    fn new(instance: &'a Instance, metric: Metric) -> Self {
        let sentences = match metric {
            Metric::SentenceF1 | Metric::SentenceF1Micro => Some(
                instance
                    .documents
                    .iter()
                    .map(segment_sentences)
                    .collect::<Vec<_>>(),
            ),
            _ => None,
        };
        EvalContext {
            instance,
            tokens: InstanceTokens::new(&instance.documents),
            sentences,
        }
    }

    /// The sentence identities `(doc, sentence index)` containing any token
    /// of the set. Tokens outside every sentence range contribute nothing.
    fn sentence_set(&self, tokens: &TokenIndexSet) -> BTreeSet<(usize, usize)> {
        let ranges = self.sentences.as_ref().expect("sentence metric context");
        let mut set = BTreeSet::new();
        for (doc, index) in tokens {
            let token = &self.tokens.doc(doc)[index];
            let doc_ranges = &ranges[doc];
            let lo = doc_ranges.partition_point(|&(_, end)| end <= token.start);
            for (si, &(start, _)) in doc_ranges.iter().enumerate().skip(lo) {
                if start >= token.end {
                    break;
                }
                set.insert((doc, si));
            }
        }
        set
    }

    /// The selected text: span texts in `(doc, start)` order joined by a
    /// single space.
    fn selection_text(&self, selection: &Selection) -> String {
        let mut parts: Vec<&str> = Vec::with_capacity(selection.len());
        for span in selection {
            parts.push(char_slice(
                &self.instance.documents[span.doc].text,
                span.start,
                span.end,
            ));
        }
        parts.join(" ")
    }

    /// Scores `pred` against reference `ri`, returning the triple plus the
    /// raw counts behind it (for micro pooling).
    fn score_against(
        &self,
        pred: &Selection,
        ri: usize,
        metric: Metric,
        pred_tokens: &TokenIndexSet,
    ) -> Result<(ScoreTriple, Counts), CoreError> {
        let reference = &self.instance.references[ri];
        match metric {
            Metric::TokenF1 => {
                let ref_tokens = self.tokens.span_to_tokens(reference)?;
                let counts = (
                    pred_tokens.intersection_len(&ref_tokens),
                    pred_tokens.len(),
                    ref_tokens.len(),
                );
                Ok((ScoreTriple::from_counts(counts.0, counts.1, counts.2), counts))
            }
            Metric::SentenceF1 | Metric::SentenceF1Micro => {
                let ref_tokens = self.tokens.span_to_tokens(reference)?;
                let pred_sents = self.sentence_set(pred_tokens);
                let ref_sents = self.sentence_set(&ref_tokens);
                let counts = (
                    pred_sents.intersection(&ref_sents).count(),
                    pred_sents.len(),
                    ref_sents.len(),
                );
                Ok((ScoreTriple::from_counts(counts.0, counts.1, counts.2), counts))
            }
            Metric::Rouge2 => {
                let pred_text = self.selection_text(pred);
                let ref_text = self.selection_text(reference);
                Ok((rouge2_f1(&pred_text, &ref_text), (0, 0, 0)))
            }
        }
    }
}

/// Token-level F1 between a predicted selection and every reference of the
/// instance, keeping the best: the triple of the reference with maximal F1
/// (ties to the lowest reference index). Returns the chosen index too.
pub fn multi_ref_score(
    pred: &Selection,
    instance: &Instance,
    metric: Metric,
) -> Result<(ScoreTriple, usize), CoreError> {
    let ctx = EvalContext::new(instance, metric);
    let pred_tokens = ctx.tokens.span_to_tokens(pred)?;
    let (triple, chosen, _) = best_reference(&ctx, pred, metric, &pred_tokens)?;
    Ok((triple, chosen))
}

fn best_reference(
    ctx: &EvalContext<'_>,
    pred: &Selection,
    metric: Metric,
    pred_tokens: &TokenIndexSet,
) -> Result<(ScoreTriple, usize, Counts), CoreError> {
    if ctx.instance.references.is_empty() {
        return Err(CoreError::NoReferences);
    }
    let mut best: Option<(ScoreTriple, usize, Counts)> = None;
    for ri in 0..ctx.instance.references.len() {
        let (triple, counts) = ctx.score_against(pred, ri, metric, pred_tokens)?;
        let replace = match &best {
            None => true,
            Some((b, _, _)) => triple.f1 > b.f1,
        };
        if replace {
            best = Some((triple, ri, counts));
        }
    }
    Ok(best.expect("at least one reference"))
}

/// ROUGE-2 F1: bigram multiset overlap between two texts, over case-folded
/// tokens. When neither text has a bigram the score is (1, 1, 1) if the
/// raw texts are equal and (0, 0, 0) otherwise.
pub fn rouge2_f1(pred_text: &str, ref_text: &str) -> ScoreTriple {
    let bigrams = |text: &str| -> BTreeMap<(String, String), usize> {
        let tokens = tokenize(text);
        let mut counts = BTreeMap::new();
        for pair in tokens.windows(2) {
            *counts
                .entry((pair[0].fold.clone(), pair[1].fold.clone()))
                .or_insert(0) += 1;
        }
        counts
    };
    let pred_bigrams = bigrams(pred_text);
    let ref_bigrams = bigrams(ref_text);
    let pred_total: usize = pred_bigrams.values().sum();
    let ref_total: usize = ref_bigrams.values().sum();
    if pred_total == 0 && ref_total == 0 {
        return if pred_text == ref_text {
            ScoreTriple {
                precision: 1.0,
                recall: 1.0,
                f1: 1.0,
            }
        } else {
            ScoreTriple::ZERO
        };
    }
    let overlap: usize = pred_bigrams
        .iter()
        .map(|(bigram, &count)| count.min(ref_bigrams.get(bigram).copied().unwrap_or(0)))
        .sum();
    ScoreTriple::from_counts(overlap, pred_total, ref_total)
}

/// Bootstrap confidence interval attached to a report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfidenceInterval {
    pub low: f64,
    pub high: f64,
    pub alpha: f64,
}

/// Score of one instance within a task evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceScore {
    pub id: String,
    pub score: ScoreTriple,
    /// Index of the reference the score was taken against.
    pub chosen_ref: usize,
}

/// Aggregate of one task.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub per_instance: Vec<InstanceScore>,
    /// Arithmetic mean of the per-instance triples — except under the
    /// micro-pooled sentence metric, where it is the triple of the pooled
    /// counts.
    pub task_mean: ScoreTriple,
    /// Bootstrap interval for the task F1, when one was requested.
    pub ci: Option<ConfidenceInterval>,
    pub n: usize,
}

/// Evaluates one task: `preds[i]` is scored against `instances[i]` under
/// `metric`, each against its best reference.
pub fn evaluate_task(
    preds: &[Selection],
    instances: &[Instance],
    metric: Metric,
) -> Result<EvalReport, CoreError> {
    if preds.len() != instances.len() {
        return Err(CoreError::LengthMismatch {
            left: preds.len(),
            right: instances.len(),
        });
    }
    if instances.is_empty() {
        return Err(CoreError::EmptyInput);
    }
    let mut per_instance = Vec::with_capacity(instances.len());
    let mut pooled = (0usize, 0usize, 0usize);
    for (pred, instance) in preds.iter().zip(instances) {
        let ctx = EvalContext::new(instance, metric);
        let pred_tokens = ctx.tokens.span_to_tokens(pred)?;
        let (triple, chosen, counts) = best_reference(&ctx, pred, metric, &pred_tokens)?;
        pooled.0 += counts.0;
        pooled.1 += counts.1;
        pooled.2 += counts.2;
        per_instance.push(InstanceScore {
            id: instance.id.clone(),
            score: triple,
            chosen_ref: chosen,
        });
    }
    let task_mean = match metric {
        Metric::SentenceF1Micro => ScoreTriple::from_counts(pooled.0, pooled.1, pooled.2),
        _ => mean_triple(per_instance.iter().map(|s| s.score)),
    };
    Ok(EvalReport {
        n: per_instance.len(),
        per_instance,
        task_mean,
        ci: None,
    })
}

/// Arithmetic mean of instance scores (the macro task score).
pub fn aggregate_task(scores: &[InstanceScore]) -> Result<EvalReport, CoreError> {
    if scores.is_empty() {
        return Err(CoreError::EmptyInput);
    }
    Ok(EvalReport {
        per_instance: scores.to_vec(),
        task_mean: mean_triple(scores.iter().map(|s| s.score)),
        ci: None,
        n: scores.len(),
    })
}

fn mean_triple(scores: impl Iterator<Item = ScoreTriple> + Clone) -> ScoreTriple {
    let n = scores.clone().count();
    if n == 0 {
        return ScoreTriple::ZERO;
    }
    let mut sum = (0.0, 0.0, 0.0);
    for s in scores {
        sum.0 += s.precision;
        sum.1 += s.recall;
        sum.2 += s.f1;
    }
    ScoreTriple {
        precision: sum.0 / n as f64,
        recall: sum.1 / n as f64,
        f1: sum.2 / n as f64,
    }
}

/// Aggregate over a whole benchmark: per-task reports plus the unweighted
/// mean of the task means (every task counts equally regardless of size).
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkReport {
    pub per_task: BTreeMap<String, EvalReport>,
    /// Unweighted mean of the task means.
    pub overall: ScoreTriple,
    /// Bootstrap interval for the overall F1, when one was requested.
    pub overall_ci: Option<ConfidenceInterval>,
}

pub fn aggregate_benchmark(
    per_task: BTreeMap<String, EvalReport>,
) -> Result<BenchmarkReport, CoreError> {
    if per_task.is_empty() {
        return Err(CoreError::EmptyInput);
    }
    let overall = mean_triple(per_task.values().map(|r| r.task_mean));
    Ok(BenchmarkReport {
        per_task,
        overall,
        overall_ci: None,
    })
}

/// Per-instance scores of one task, the resampling unit of the bootstrap.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskScores {
    pub task: String,
    pub scores: Vec<f64>,
}

/// Percentile-bootstrap confidence interval for the overall benchmark
/// score. Each iteration resamples every task's instances with replacement
/// (task sizes fixed), recomputes each task mean, and averages the task
/// means; the interval is the `[alpha/2, 1 - alpha/2]` percentile range of
/// the resulting distribution.
///
/// Deterministic: iteration `i` draws from the stream `(seed, "bootstrap", i)`,
/// so results are independent of evaluation order.
///
/// # Panics
/// When `tasks` is empty, any task has no scores, or `iterations` is zero —
/// those are caller contract violations, not data conditions.
pub fn bootstrap_ci(
    tasks: &[TaskScores],
    iterations: usize,
    alpha: f64,
    seed: u64,
) -> (f64, f64) {
    let mut dist = bootstrap_distribution(tasks, iterations, seed);
    dist.sort_unstable_by(f64::total_cmp);
    (
        percentile(&dist, alpha / 2.0),
        percentile(&dist, 1.0 - alpha / 2.0),
    )
}

/// The raw bootstrap distribution behind [`bootstrap_ci`], unsorted, one
/// overall score per iteration.
pub fn bootstrap_distribution(tasks: &[TaskScores], iterations: usize, seed: u64) -> Vec<f64> {
    assert!(!tasks.is_empty(), "bootstrap needs at least one task");
    assert!(
        tasks.iter().all(|t| !t.scores.is_empty()),
        "bootstrap needs at least one score per task"
    );
    assert!(iterations > 0, "bootstrap needs at least one iteration");
    (0..iterations)
        .map(|i| {
            let mut rng = stream_rng(seed, "bootstrap", i as u64);
            let mut total = 0.0;
            for task in tasks {
                let n = task.scores.len();
                let mut sum = 0.0;
                for _ in 0..n {
                    sum += task.scores[rng.random_range(0..n)];
                }
                total += sum / n as f64;
            }
            total / tasks.len() as f64
        })
        .collect()
}

/// Linear-interpolation percentile of a sorted sample at quantile `q`.
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    debug_assert!(n > 0);
    if n == 1 {
        return sorted[0];
    }
    let pos = q.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = pos as usize; // truncation == floor for non-negative pos
    let frac = pos - lo as f64;
    if lo + 1 < n {
        sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
    } else {
        sorted[n - 1]
    }
}

/// Paired permutation test on the difference of means of two systems'
/// per-instance scores. Each resample flips the sign of every paired
/// difference independently; the two-sided p-value is the fraction of
/// resamples — counting the observed statistic itself — whose |sum of
/// differences| reaches the observed one. Identical inputs give exactly 1.
pub fn permutation_test(
    scores_a: &[f64],
    scores_b: &[f64],
    resamples: usize,
    seed: u64,
) -> Result<f64, CoreError> {
    if scores_a.len() != scores_b.len() {
        return Err(CoreError::LengthMismatch {
            left: scores_a.len(),
            right: scores_b.len(),
        });
    }
    if scores_a.is_empty() {
        return Err(CoreError::EmptyInput);
    }
    let diffs: Vec<f64> = scores_a
        .iter()
        .zip(scores_b)
        .map(|(a, b)| a - b)
        .collect();
    let observed = fabs(diffs.iter().sum::<f64>());
    let mut hits = 0usize;
    for i in 0..resamples {
        let mut rng = stream_rng(seed, "permutation", i as u64);
        let sum: f64 = diffs
            .iter()
            .map(|&d| if rng.random::<bool>() { d } else { -d })
            .sum();
        if fabs(sum) >= observed {
            hits += 1;
        }
    }
    Ok((hits + 1) as f64 / (resamples + 1) as f64)
}

/// Mean pairwise token-F1 agreement between annotators. `annotations[k][i]`
/// is annotator `k`'s selection for `instances[i]`; the result averages,
/// over all unordered annotator pairs, the mean per-instance F1 between
/// their selections.
pub fn agreement(
    instances: &[Instance],
    annotations: &[Vec<Selection>],
) -> Result<f64, CoreError> {
    if annotations.len() < 2 {
        return Err(CoreError::TooFewAnnotators {
            count: annotations.len(),
        });
    }
    for ann in annotations {
        if ann.len() != instances.len() {
            return Err(CoreError::LengthMismatch {
                left: ann.len(),
                right: instances.len(),
            });
        }
    }
    if instances.is_empty() {
        return Err(CoreError::EmptyInput);
    }
    // Token sets once per (annotator, instance).
    let mut sets: Vec<Vec<TokenIndexSet>> = Vec::with_capacity(annotations.len());
    for ann in annotations {
        let mut row = Vec::with_capacity(instances.len());
        for (sel, instance) in ann.iter().zip(instances) {
            let tokens = InstanceTokens::new(&instance.documents);
            row.push(tokens.span_to_tokens(sel)?);
        }
        sets.push(row);
    }
    let mut pair_sum = 0.0;
    let mut pairs = 0usize;
    for a in 0..sets.len() {
        for b in (a + 1)..sets.len() {
            let mut instance_sum = 0.0;
            for (sa, sb) in sets[a].iter().zip(&sets[b]) {
                instance_sum += token_f1(sa, sb).f1;
            }
            pair_sum += instance_sum / instances.len() as f64;
            pairs += 1;
        }
    }
    Ok(pair_sum / pairs as f64)
}
