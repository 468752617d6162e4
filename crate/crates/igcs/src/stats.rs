//! Descriptive dataset statistics: token counts for sources, selections
//! (first reference), and individual spans, with log2 histograms.

use serde::Serialize;

use igcs_core::tokenize::InstanceTokens;
use igcs_core::types::{CoreError, Instance, Selection, Span};

/// One histogram bucket `[floor, 2×floor)`; the zero bucket holds exact
/// zeros. Only non-empty buckets are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HistogramBucket {
    pub floor: usize,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct FieldStats {
    pub n: usize,
    pub mean: f64,
    pub min: usize,
    pub max: usize,
    pub histogram: Vec<HistogramBucket>,
}

impl FieldStats {
    fn from_values(values: &[usize]) -> Option<FieldStats> {
        if values.is_empty() {
            return None;
        }
        let mut buckets = std::collections::BTreeMap::new();
        for &v in values {
            let floor = if v == 0 { 0 } else { 1usize << v.ilog2() };
            *buckets.entry(floor).or_insert(0usize) += 1;
        }
        Some(FieldStats {
            n: values.len(),
            mean: values.iter().sum::<usize>() as f64 / values.len() as f64,
            min: *values.iter().min().expect("non-empty"),
            max: *values.iter().max().expect("non-empty"),
            histogram: buckets
                .into_iter()
                .map(|(floor, count)| HistogramBucket { floor, count })
                .collect(),
        })
    }

    fn empty() -> FieldStats {
        FieldStats {
            n: 0,
            mean: 0.0,
            min: 0,
            max: 0,
            histogram: Vec::new(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct DatasetStats {
    pub instances: usize,
    /// Total source tokens per instance (all documents).
    pub source_tokens: FieldStats,
    /// Selected tokens per instance, measured on the first reference.
    pub selection_tokens: FieldStats,
    /// Tokens per individual span of the first references.
    pub span_tokens: FieldStats,
}

/// Computes dataset statistics. An empty dataset is an error.
pub fn dataset_stats(instances: &[Instance]) -> Result<DatasetStats, CoreError> {
    if instances.is_empty() {
        return Err(CoreError::EmptyInput);
    }
    let mut source = Vec::with_capacity(instances.len());
    let mut selection = Vec::with_capacity(instances.len());
    let mut spans = Vec::new();
    for instance in instances {
        let tokens = InstanceTokens::new(&instance.documents);
        source.push(tokens.total_tokens());
        match instance.references.first() {
            Some(reference) => {
                selection.push(tokens.span_to_tokens(reference)?.len());
                for span in reference.iter() {
                    let single = Selection::new(vec![Span::new(span.doc, span.start, span.end)])?;
                    spans.push(tokens.span_to_tokens(&single)?.len());
                }
            }
            None => selection.push(0),
        }
    }
    Ok(DatasetStats {
        instances: instances.len(),
        source_tokens: FieldStats::from_values(&source).expect("instances present"),
        selection_tokens: FieldStats::from_values(&selection).expect("instances present"),
        span_tokens: FieldStats::from_values(&spans).unwrap_or_else(FieldStats::empty),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use igcs_core::types::Document;
    use std::collections::BTreeMap;

    fn instance(text: &str, reference: Option<Vec<Span>>) -> Instance {
        Instance {
            id: format!("i{}", text.len()),
            task: "demo".into(),
            instruction: "Select content".into(),
            selection_type: "text phrases".into(),
            source_type: "document(s)".into(),
            documents: vec![Document::new("d0".to_string(), text.to_string())],
            references: reference
                .map(|spans| {
                    vec![if spans.is_empty() {
                        Selection::empty()
                    } else {
                        Selection::new(spans).unwrap()
                    }]
                })
                .unwrap_or_default(),
            allow_empty: true,
            metadata: BTreeMap::new(),
        }
    }

    #[test]
    fn worked_example_seven_source_two_selected() {
        // "The cat sat on the mat." has 7 tokens; the reference "cat sat"
        // covers 2 of them in one span.
        let inst = instance("The cat sat on the mat.", Some(vec![Span::new(0, 4, 11)]));
        let stats = dataset_stats(&[inst]).unwrap();
        assert_eq!(stats.instances, 1);
        assert_eq!(stats.source_tokens.mean, 7.0);
        assert_eq!(stats.selection_tokens.mean, 2.0);
        assert_eq!(stats.span_tokens.mean, 2.0);
        assert_eq!(stats.source_tokens.min, 7);
        assert_eq!(stats.source_tokens.max, 7);
    }

    #[test]
    fn only_first_reference_counts() {
        let mut inst = instance("alpha beta gamma delta", Some(vec![Span::new(0, 0, 10)]));
        inst.references.push(
            Selection::new(vec![Span::new(0, 0, 22)]).unwrap(),
        );
        let stats = dataset_stats(core::slice::from_ref(&inst)).unwrap();
        // First reference "alpha beta" = 2 tokens; the 4-token second
        // reference is ignored.
        assert_eq!(stats.selection_tokens.mean, 2.0);
    }

    #[test]
    fn spans_are_measured_individually() {
        let inst = instance(
            "alpha beta gamma delta epsilon",
            Some(vec![Span::new(0, 0, 10), Span::new(0, 17, 30)]),
        );
        let stats = dataset_stats(&[inst]).unwrap();
        // Spans: "alpha beta" (2 tokens) and "delta epsilon" (2 tokens).
        assert_eq!(stats.selection_tokens.mean, 4.0);
        assert_eq!(stats.span_tokens.n, 2);
        assert_eq!(stats.span_tokens.mean, 2.0);
    }

    #[test]
    fn histogram_buckets_are_powers_of_two() {
        let values = [0usize, 1, 1, 2, 3, 4, 7, 8, 100];
        let stats = FieldStats::from_values(&values).unwrap();
        let buckets: Vec<(usize, usize)> = stats
            .histogram
            .iter()
            .map(|b| (b.floor, b.count))
            .collect();
        assert_eq!(buckets, vec![(0, 1), (1, 2), (2, 2), (4, 2), (8, 1), (64, 1)]);
    }

    #[test]
    fn empty_reference_counts_zero_selected() {
        let inst = instance("alpha beta", Some(vec![]));
        let stats = dataset_stats(&[inst]).unwrap();
        assert_eq!(stats.selection_tokens.mean, 0.0);
        assert_eq!(stats.span_tokens.n, 0);
    }

    #[test]
    fn empty_dataset_is_an_error() {
        assert!(dataset_stats(&[]).is_err());
    }
}
