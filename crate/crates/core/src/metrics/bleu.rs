use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

use super::MetricsError;

/// Additive smoothing constant for sentence-level BLEU.
pub const SMOOTHING_EPSILON: f64 = 1e-9;

/// Clipped n-gram match count and candidate n-gram total for one order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NgramPrecision {
    pub matched: usize,
    pub total: usize,
}

impl NgramPrecision {
    pub fn value(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.matched as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuScores {
    /// BLEU_1..BLEU_n on a 0–100 scale.
    pub scores: Vec<f64>,
    pub precisions: Vec<NgramPrecision>,
    pub brevity_penalty: f64,
    pub hypothesis_length: usize,
    pub reference_length: usize,
}

fn ngram_counts<T: Eq + Hash>(tokens: &[T], n: usize) -> HashMap<&[T], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Clipped n-gram precision of one candidate against one or more references.
/// Each candidate n-gram count is clipped to its maximum count in any reference.
pub fn modified_precision<T: Eq + Hash>(candidate: &[T], references: &[&[T]], n: usize) -> NgramPrecision {
    let cand = ngram_counts(candidate, n);
    let total = cand.values().sum();
    let mut max_ref: HashMap<&[T], usize> = HashMap::new();
    for r in references {
        for (gram, c) in ngram_counts(r, n) {
            let e = max_ref.entry(gram).or_insert(0);
            *e = (*e).max(c);
        }
    }
    let matched = cand
        .iter()
        .map(|(gram, &c)| c.min(max_ref.get(gram).copied().unwrap_or(0)))
        .sum();
    NgramPrecision { matched, total }
}

fn brevity_penalty(hyp_len: usize, ref_len: usize) -> f64 {
    if hyp_len == 0 {
        0.0
    } else if hyp_len > ref_len {
        1.0
    } else {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    }
}

fn closest_ref_length<T>(hyp_len: usize, references: &[&[T]]) -> usize {
    references
        .iter()
        .map(|r| r.len())
        .min_by_key(|&l| (l.abs_diff(hyp_len), l))
        .unwrap_or(0)
}

fn cumulative_scores(precisions: &[f64], bp: f64) -> Vec<f64> {
    let mut log_sum = 0.0;
    let mut zero = false;
    precisions
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            if p <= 0.0 {
                zero = true;
            } else {
                log_sum += p.ln();
            }
            if zero {
                0.0
            } else {
                100.0 * bp * (log_sum / (i + 1) as f64).exp()
            }
        })
        .collect()
}

/// Corpus-level BLEU with one reference per prediction.
///
/// Matches and totals are summed over the corpus before dividing. An order with
/// no matched n-gram yields 0 for that order and every higher order.
pub fn bleu_corpus<T: Eq + Hash, P: AsRef<[T]>, R: AsRef<[T]>>(
    predictions: &[P],
    references: &[R],
    max_n: usize,
) -> Result<BleuScores, MetricsError> {
    let refs: Vec<Vec<&[T]>> = references.iter().map(|r| vec![r.as_ref()]).collect();
    bleu_corpus_multi(predictions, &refs, max_n)
}

/// Corpus-level BLEU where each prediction may have several references.
pub fn bleu_corpus_multi<T: Eq + Hash, P: AsRef<[T]>>(
    predictions: &[P],
    references: &[Vec<&[T]>],
    max_n: usize,
) -> Result<BleuScores, MetricsError> {
    if max_n == 0 {
        return Err(MetricsError::InvalidOrder);
    }
    if predictions.len() != references.len() {
        return Err(MetricsError::Misaligned {
            predictions: predictions.len(),
            references: references.len(),
        });
    }
    if predictions.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let mut totals = vec![NgramPrecision::default(); max_n];
    let (mut hyp_len, mut ref_len) = (0usize, 0usize);
    for (pred, refs) in predictions.iter().zip(references) {
        let pred = pred.as_ref();
        hyp_len += pred.len();
        ref_len += closest_ref_length(pred.len(), refs);
        for (n, slot) in totals.iter_mut().enumerate() {
            let p = modified_precision(pred, refs, n + 1);
            slot.matched += p.matched;
            slot.total += p.total;
        }
    }
    let bp = brevity_penalty(hyp_len, ref_len);
    let values: Vec<f64> = totals.iter().map(NgramPrecision::value).collect();
    Ok(BleuScores {
        scores: cumulative_scores(&values, bp),
        precisions: totals,
        brevity_penalty: bp,
        hypothesis_length: hyp_len,
        reference_length: ref_len,
    })
}

/// Sentence-level BLEU_1..n with additive smoothing, so zero-match orders give
/// a tiny positive precision rather than collapsing the geometric mean.
pub fn sentence_bleu_smoothed<T: Eq + Hash>(prediction: &[T], reference: &[T], max_n: usize) -> Vec<f64> {
    let refs = [reference];
    let precisions: Vec<f64> = (1..=max_n)
        .map(|n| {
            let p = modified_precision(prediction, &refs, n);
            if p.total == 0 {
                SMOOTHING_EPSILON
            } else {
                (p.matched as f64 + SMOOTHING_EPSILON) / (p.total as f64 + SMOOTHING_EPSILON)
            }
        })
        .collect();
    cumulative_scores(&precisions, brevity_penalty(prediction.len(), reference.len()))
}
