use super::lcs::lcs_length;
use super::MetricsError;

/// Recall weight of the LCS F-measure.
pub const ROUGE_L_BETA: f64 = 1.2;

/// Sentence ROUGE_L F-measure in [0, 1].
///
/// Returns 0 (and logs a warning) when either side is empty.
pub fn rouge_l<T: PartialEq>(prediction: &[T], reference: &[T]) -> f64 {
    if prediction.is_empty() || reference.is_empty() {
        log::warn!("ROUGE_L on an empty sequence scores 0");
        return 0.0;
    }
    let lcs = lcs_length(prediction, reference) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let recall = lcs / reference.len() as f64;
    let precision = lcs / prediction.len() as f64;
    let b2 = ROUGE_L_BETA * ROUGE_L_BETA;
    (1.0 + b2) * recall * precision / (recall + b2 * precision)
}

/// Mean sentence ROUGE_L over aligned pairs, ×100.
pub fn rouge_l_corpus<T: PartialEq, P: AsRef<[T]>, R: AsRef<[T]>>(
    predictions: &[P],
    references: &[R],
) -> Result<f64, MetricsError> {
    if predictions.len() != references.len() {
        return Err(MetricsError::Misaligned {
            predictions: predictions.len(),
            references: references.len(),
        });
    }
    if predictions.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let sum: f64 = predictions
        .iter()
        .zip(references)
        .map(|(p, r)| rouge_l(p.as_ref(), r.as_ref()))
        .sum();
    Ok(100.0 * sum / predictions.len() as f64)
}
