use std::cmp::Ordering;
use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DecodeError;

const PROBABILITY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightKind {
    Logits,
    Probabilities,
}

/// Candidate next tokens with either raw scores or probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenDistribution {
    kind: WeightKind,
    entries: Vec<(String, f64)>,
}

impl TokenDistribution {
    pub fn logits<I, S>(entries: I) -> Result<Self, DecodeError>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        Self::new(WeightKind::Logits, entries)
    }

    pub fn probabilities<I, S>(entries: I) -> Result<Self, DecodeError>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        Self::new(WeightKind::Probabilities, entries)
    }

    pub fn new<I, S>(kind: WeightKind, entries: I) -> Result<Self, DecodeError>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        let entries: Vec<(String, f64)> = entries.into_iter().map(|(t, w)| (t.into(), w)).collect();
        let mut seen = HashSet::with_capacity(entries.len());
        for (token, weight) in &entries {
            if !seen.insert(token.as_str()) {
                return Err(DecodeError::InvalidDistribution(format!("duplicate token {token:?}")));
            }
            if weight.is_nan() || (kind == WeightKind::Logits && weight.is_infinite() && *weight > 0.0) {
                return Err(DecodeError::InvalidDistribution(format!(
                    "non-finite weight for {token:?}"
                )));
            }
            if kind == WeightKind::Probabilities && !(0.0..=1.0 + PROBABILITY_TOLERANCE).contains(weight) {
                return Err(DecodeError::InvalidDistribution(format!(
                    "probability {weight} for {token:?} outside [0, 1]"
                )));
            }
        }
        if kind == WeightKind::Probabilities && !entries.is_empty() {
            let sum: f64 = entries.iter().map(|(_, w)| w).sum();
            if (sum - 1.0).abs() > PROBABILITY_TOLERANCE {
                return Err(DecodeError::InvalidDistribution(format!(
                    "probabilities sum to {sum}"
                )));
            }
        }
        Ok(Self { kind, entries })
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn weight(&self, token: &str) -> Option<f64> {
        self.entries.iter().find(|(t, _)| t == token).map(|(_, w)| *w)
    }

    /// Highest-weight token, ties resolved by token text ascending.
    pub fn argmax(&self) -> Option<&str> {
        self.entries
            .iter()
            .min_by(|a, b| descending_weight_then_text(a, b))
            .map(|(t, _)| t.as_str())
    }
}

fn descending_weight_then_text(a: &(String, f64), b: &(String, f64)) -> Ordering {
    b.1.partial_cmp(&a.1)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.0.cmp(&b.0))
}

/// Softmax of `logit / temperature`.
///
/// Probability-tagged input is treated as `ln p` logits, which makes
/// temperature 1 an identity; zero-probability tokens are dropped.
pub fn apply_temperature(dist: &TokenDistribution, temperature: f64) -> Result<TokenDistribution, DecodeError> {
    if !temperature.is_finite() || temperature <= 0.0 {
        return Err(DecodeError::InvalidParams(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    let scores: Vec<(&str, f64)> = match dist.kind {
        WeightKind::Logits => dist.entries.iter().map(|(t, w)| (t.as_str(), *w)).collect(),
        WeightKind::Probabilities => dist
            .entries
            .iter()
            .filter(|(_, p)| *p > 0.0)
            .map(|(t, p)| (t.as_str(), p.ln()))
            .collect(),
    };
    let finite: Vec<(&str, f64)> = scores.into_iter().filter(|(_, s)| s.is_finite()).collect();
    if finite.is_empty() {
        return Err(DecodeError::InvalidDistribution("no finite scores".into()));
    }
    let max = finite.iter().map(|(_, s)| *s).fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = finite.iter().map(|(_, s)| ((s - max) / temperature).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(TokenDistribution {
        kind: WeightKind::Probabilities,
        entries: finite
            .iter()
            .zip(exps)
            .map(|((t, _), e)| (t.to_string(), e / total))
            .collect(),
    })
}

/// Keeps the smallest set of most-probable tokens whose mass reaches `top_p`
/// and renormalizes it. Equal probabilities are ordered by token text. Kept
/// tokens stay in their input order.
pub fn nucleus_filter(dist: &TokenDistribution, top_p: f64) -> Result<TokenDistribution, DecodeError> {
    if dist.kind != WeightKind::Probabilities {
        return Err(DecodeError::InvalidDistribution(
            "nucleus filtering needs probabilities".into(),
        ));
    }
    if !(top_p > 0.0 && top_p <= 1.0) {
        return Err(DecodeError::InvalidParams(format!("top_p must be in (0, 1], got {top_p}")));
    }
    if top_p >= 1.0 {
        return Ok(dist.clone());
    }
    let mut order: Vec<usize> = (0..dist.entries.len()).collect();
    order.sort_by(|&a, &b| descending_weight_then_text(&dist.entries[a], &dist.entries[b]));
    let mut keep = vec![false; dist.entries.len()];
    let mut mass = 0.0;
    for idx in order {
        keep[idx] = true;
        mass += dist.entries[idx].1;
        if mass >= top_p {
            break;
        }
    }
    let entries = dist
        .entries
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|((t, p), _)| (t.clone(), p / mass))
        .collect();
    Ok(TokenDistribution {
        kind: WeightKind::Probabilities,
        entries,
    })
}

/// Seeded random source for token sampling. One per generation session.
#[derive(Debug, Clone)]
pub struct SamplerRng(ChaCha8Rng);

impl SamplerRng {
    pub fn seeded(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }
}

/// Draws one token from a probability distribution.
pub fn sample_token(dist: &TokenDistribution, rng: &mut SamplerRng) -> Result<String, DecodeError> {
    if dist.kind != WeightKind::Probabilities {
        return Err(DecodeError::InvalidDistribution("sampling needs probabilities".into()));
    }
    let Some(last_positive) = dist.entries.iter().rposition(|(_, p)| *p > 0.0) else {
        return Err(DecodeError::EmptyDistribution);
    };
    let u: f64 = rng.0.random();
    let mut cumulative = 0.0;
    for (token, p) in &dist.entries {
        cumulative += p;
        if u < cumulative {
            return Ok(token.clone());
        }
    }
    // u landed in the rounding gap above the final cumulative sum.
    Ok(dist.entries[last_positive].0.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn probs(entries: &[(&str, f64)]) -> TokenDistribution {
        TokenDistribution::probabilities(entries.iter().map(|&(t, p)| (t, p))).unwrap()
    }

    #[test]
    fn temperature_symmetric_logits() {
        let d = TokenDistribution::logits([("a", 0.0), ("b", 0.0)]).unwrap();
        let p = apply_temperature(&d, 0.6).unwrap();
        assert_eq!(p.weight("a"), Some(0.5));
        assert_eq!(p.weight("b"), Some(0.5));
    }

    #[test]
    fn temperature_closed_form() {
        let d = TokenDistribution::logits([("a", 2.0), ("b", 0.0)]).unwrap();
        let p = apply_temperature(&d, 0.5).unwrap();
        let e4 = 4.0f64.exp();
        assert!((p.weight("a").unwrap() - e4 / (e4 + 1.0)).abs() < 1e-9);
        assert!((p.weight("b").unwrap() - 1.0 / (e4 + 1.0)).abs() < 1e-9);
    }

    #[test]
    fn temperature_rejects_non_positive() {
        let d = TokenDistribution::logits([("a", 1.0)]).unwrap();
        assert!(matches!(apply_temperature(&d, 0.0), Err(DecodeError::InvalidParams(_))));
        assert!(matches!(apply_temperature(&d, -1.0), Err(DecodeError::InvalidParams(_))));
    }

    #[test]
    fn temperature_one_on_probabilities_is_identity() {
        let d = probs(&[("a", 0.5), ("b", 0.3), ("c", 0.2)]);
        let p = apply_temperature(&d, 1.0).unwrap();
        for (t, w) in d.entries() {
            assert!((p.weight(t).unwrap() - w).abs() < 1e-12);
        }
    }

    #[test]
    fn nucleus_examples() {
        let d = probs(&[("a", 0.5), ("b", 0.3), ("c", 0.2)]);
        let f = nucleus_filter(&d, 0.7).unwrap();
        assert_eq!(f.len(), 2);
        assert!((f.weight("a").unwrap() - 0.625).abs() < 1e-12);
        assert!((f.weight("b").unwrap() - 0.375).abs() < 1e-12);

        let all = nucleus_filter(&d, 0.9).unwrap();
        assert_eq!(all.len(), 3);
        for (t, w) in d.entries() {
            assert!((all.weight(t).unwrap() - w).abs() < 1e-12);
        }
        assert_eq!(nucleus_filter(&d, 1.0).unwrap(), d);
    }

    #[test]
    fn nucleus_ties_prefer_lower_token_text() {
        let d = probs(&[("z", 0.25), ("y", 0.25), ("b", 0.25), ("a", 0.25)]);
        let f = nucleus_filter(&d, 0.5).unwrap();
        let kept: Vec<&str> = f.entries().iter().map(|(t, _)| t.as_str()).collect();
        assert_eq!(kept, vec!["b", "a"]);
    }

    #[test]
    fn nucleus_rejects_bad_p() {
        let d = probs(&[("a", 1.0)]);
        assert!(nucleus_filter(&d, 0.0).is_err());
        assert!(nucleus_filter(&d, 1.5).is_err());
    }

    #[test]
    fn invalid_distributions() {
        assert!(TokenDistribution::probabilities([("a", 0.5), ("b", 0.4)]).is_err());
        assert!(TokenDistribution::probabilities([("a", 0.5), ("a", 0.5)]).is_err());
        assert!(TokenDistribution::probabilities([("a", -0.5), ("b", 1.5)]).is_err());
        assert!(TokenDistribution::logits([("a", f64::NAN)]).is_err());
    }

    #[test]
    fn degenerate_and_empty_sampling() {
        let mut rng = SamplerRng::seeded(7);
        let d = probs(&[("a", 1.0)]);
        for _ in 0..100 {
            assert_eq!(sample_token(&d, &mut rng).unwrap(), "a");
        }
        let empty = TokenDistribution::probabilities(Vec::<(String, f64)>::new()).unwrap();
        assert!(matches!(sample_token(&empty, &mut rng), Err(DecodeError::EmptyDistribution)));
    }

    #[test]
    fn zero_weight_never_drawn() {
        let mut rng = SamplerRng::seeded(1);
        let d = probs(&[("never", 0.0), ("a", 0.5), ("b", 0.5)]);
        for _ in 0..10_000 {
            assert_ne!(sample_token(&d, &mut rng).unwrap(), "never");
        }
    }

    #[test]
    fn fixed_seed_repeats() {
        let d = probs(&[("a", 0.2), ("b", 0.3), ("c", 0.5)]);
        let draw = |seed| {
            let mut rng = SamplerRng::seeded(seed);
            (0..50).map(|_| sample_token(&d, &mut rng).unwrap()).collect::<Vec<_>>()
        };
        assert_eq!(draw(42), draw(42));
        assert_ne!(draw(42), draw(43));
    }
}
