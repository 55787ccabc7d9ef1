use super::porter;
use super::MetricsError;

/// Parameters of the METEOR score: `alpha` weights precision against recall in
/// the harmonic mean, `gamma`·(chunks/matches)^`beta` is the fragmentation penalty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeteorParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for MeteorParams {
    fn default() -> Self {
        Self {
            alpha: 0.9,
            beta: 3.0,
            gamma: 0.5,
        }
    }
}

/// Aligns `pred` to `reference` in two stages (exact surface match, then Porter
/// stem match over the still-unaligned tokens). Returns (pred index, ref index)
/// pairs sorted by prediction position.
fn align(pred: &[&str], reference: &[&str]) -> Vec<(usize, usize)> {
    let mut ref_used = vec![false; reference.len()];
    let mut pred_link: Vec<Option<usize>> = vec![None; pred.len()];

    let pred_stems: Vec<String> = pred.iter().map(|t| porter::stem(t)).collect();
    let ref_stems: Vec<String> = reference.iter().map(|t| porter::stem(t)).collect();

    for stage in 0..2 {
        for i in 0..pred.len() {
            if pred_link[i].is_some() {
                continue;
            }
            let matches = |j: usize| {
                !ref_used[j]
                    && if stage == 0 {
                        pred[i] == reference[j]
                    } else {
                        pred_stems[i] == ref_stems[j]
                    }
            };
            // Prefer the reference position that continues the previous chunk.
            let continuation = i
                .checked_sub(1)
                .and_then(|p| pred_link[p])
                .map(|j| j + 1)
                .filter(|&j| j < reference.len() && matches(j));
            let chosen = continuation.or_else(|| (0..reference.len()).find(|&j| matches(j)));
            if let Some(j) = chosen {
                ref_used[j] = true;
                pred_link[i] = Some(j);
            }
        }
    }
    pred_link
        .into_iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| (i, j)))
        .collect()
}

fn count_chunks(alignment: &[(usize, usize)]) -> usize {
    if alignment.is_empty() {
        return 0;
    }
    1 + alignment
        .windows(2)
        .filter(|w| !(w[1].0 == w[0].0 + 1 && w[1].1 == w[0].1 + 1))
        .count()
}

/// Sentence METEOR in [0, 1].
pub fn meteor(prediction: &[&str], reference: &[&str], params: &MeteorParams) -> f64 {
    if prediction.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let alignment = align(prediction, reference);
    let m = alignment.len();
    if m == 0 {
        return 0.0;
    }
    let chunks = count_chunks(&alignment) as f64;
    let m = m as f64;
    let precision = m / prediction.len() as f64;
    let recall = m / reference.len() as f64;
    let fmean = precision * recall / (params.alpha * precision + (1.0 - params.alpha) * recall);
    let penalty = params.gamma * (chunks / m).powf(params.beta);
    fmean * (1.0 - penalty)
}

/// Mean sentence METEOR over aligned pairs, ×100.
pub fn meteor_corpus<'a, P, R>(predictions: &[P], references: &[R], params: &MeteorParams) -> Result<f64, MetricsError>
where
    P: AsRef<[&'a str]>,
    R: AsRef<[&'a str]>,
{
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
        .map(|(p, r)| meteor(p.as_ref(), r.as_ref(), params))
        .sum();
    Ok(100.0 * sum / predictions.len() as f64)
}
