//! Evaluation metrics for generated questions: BLEU_1–4, ROUGE_L and METEOR,
//! together with the shared evaluation tokenizer and LCS kernel.
//!
//! All corpus scores are reported on a 0–100 scale.

mod bleu;
mod lcs;
mod meteor;
pub mod porter;
mod rouge;
mod tokenize;

pub use bleu::{
    bleu_corpus, modified_precision, sentence_bleu_smoothed, BleuScores, NgramPrecision,
    SMOOTHING_EPSILON,
};
pub use lcs::lcs_length;
pub use meteor::{meteor, meteor_corpus, MeteorParams};
pub use rouge::{rouge_l, rouge_l_corpus, ROUGE_L_BETA};
pub use tokenize::{tokenize_eval, tokens_as_strs, EvalToken};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("predictions ({predictions}) and references ({references}) are not aligned")]
    Misaligned { predictions: usize, references: usize },
    #[error("max n-gram order must be at least 1")]
    InvalidOrder,
}

/// One row of automatic scores over a prediction set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub bleu1: f64,
    pub bleu2: f64,
    pub bleu3: f64,
    pub bleu4: f64,
    pub meteor: f64,
    pub rouge_l: f64,
    pub prediction_count: usize,
}

impl ScoreReport {
    /// Metric values in the order BLEU_1..4, METEOR, ROUGE_L.
    pub fn values(&self) -> [(&'static str, f64); 6] {
        [
            ("bleu1", self.bleu1),
            ("bleu2", self.bleu2),
            ("bleu3", self.bleu3),
            ("bleu4", self.bleu4),
            ("meteor", self.meteor),
            ("rouge_l", self.rouge_l),
        ]
    }
}

/// Describes the metric implementation choices so that reports produced with
/// different variants are never compared.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricVariant {
    pub tokenizer: String,
    pub bleu_max_n: usize,
    pub bleu_smoothing: String,
    pub rouge_l_beta: f64,
    pub meteor_alpha: f64,
    pub meteor_beta: f64,
    pub meteor_gamma: f64,
    pub meteor_stages: Vec<String>,
    pub stemmer: String,
}

impl Default for MetricVariant {
    fn default() -> Self {
        let m = MeteorParams::default();
        Self {
            tokenizer: tokenize::TOKENIZER_ID.to_string(),
            bleu_max_n: 4,
            bleu_smoothing: "none".to_string(),
            rouge_l_beta: ROUGE_L_BETA,
            meteor_alpha: m.alpha,
            meteor_beta: m.beta,
            meteor_gamma: m.gamma,
            meteor_stages: vec!["exact".to_string(), "stem".to_string()],
            stemmer: "porter".to_string(),
        }
    }
}

impl MetricVariant {
    /// Names the first field that differs between two variants.
    pub fn first_difference(&self, other: &MetricVariant) -> Option<&'static str> {
        if self.tokenizer != other.tokenizer {
            Some("tokenizer")
        } else if self.bleu_max_n != other.bleu_max_n {
            Some("bleu_max_n")
        } else if self.bleu_smoothing != other.bleu_smoothing {
            Some("bleu_smoothing")
        } else if self.rouge_l_beta != other.rouge_l_beta {
            Some("rouge_l_beta")
        } else if self.meteor_alpha != other.meteor_alpha {
            Some("meteor_alpha")
        } else if self.meteor_beta != other.meteor_beta {
            Some("meteor_beta")
        } else if self.meteor_gamma != other.meteor_gamma {
            Some("meteor_gamma")
        } else if self.meteor_stages != other.meteor_stages {
            Some("meteor_stages")
        } else if self.stemmer != other.stemmer {
            Some("stemmer")
        } else {
            None
        }
    }
}

/// Scores aligned prediction/reference strings with every metric.
pub fn score_corpus(predictions: &[&str], references: &[&str]) -> Result<ScoreReport, MetricsError> {
    if predictions.len() != references.len() {
        return Err(MetricsError::Misaligned {
            predictions: predictions.len(),
            references: references.len(),
        });
    }
    if predictions.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let preds: Vec<Vec<EvalToken>> = predictions.iter().map(|p| tokenize_eval(p)).collect();
    let refs: Vec<Vec<EvalToken>> = references.iter().map(|r| tokenize_eval(r)).collect();
    let preds: Vec<Vec<&str>> = preds.iter().map(|t| tokens_as_strs(t)).collect();
    let refs: Vec<Vec<&str>> = refs.iter().map(|t| tokens_as_strs(t)).collect();
    let bleu = bleu_corpus(&preds, &refs, 4)?;
    Ok(ScoreReport {
        bleu1: bleu.scores[0],
        bleu2: bleu.scores[1],
        bleu3: bleu.scores[2],
        bleu4: bleu.scores[3],
        meteor: meteor_corpus(&preds, &refs, &MeteorParams::default())?,
        rouge_l: rouge_l_corpus(&preds, &refs)?,
        prediction_count: predictions.len(),
    })
}
