use serde::{Deserialize, Serialize};

use super::{split_sentences, AnalysisError};
use crate::dataset::{render_prompt, ContextParagraph, FormatConfig};
use crate::decode::{generate_question, Backend, GenerationParams};
use crate::metrics::{sentence_bleu_smoothed, tokenize_eval, tokens_as_strs};

/// Accepted sentence counts for a paragraph entering the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionBounds {
    pub min_sentences: usize,
    pub max_sentences: usize,
}

impl Default for ReductionBounds {
    fn default() -> Self {
        Self {
            min_sentences: 2,
            max_sentences: 30,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub sentence_count: usize,
    /// Smoothed sentence BLEU_1..4, 0–100, best over the reference questions.
    pub bleu: [f64; 4],
    pub generated: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionCurve {
    pub paragraph_id: String,
    /// Ordered by increasing sentence count.
    pub points: Vec<CurvePoint>,
    /// Set when the backend failed part-way; `points` then holds what was
    /// collected before the failure.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Generates from the paragraph truncated to its first k sentences, for k from
/// the full count down to 1, scoring each output against every reference
/// question of the paragraph.
pub fn sentence_reduction_experiment(
    paragraph: &ContextParagraph,
    backend: &dyn Backend,
    params: &GenerationParams,
    cfg: &FormatConfig,
    bounds: ReductionBounds,
) -> Result<ReductionCurve, AnalysisError> {
    if cfg.answer_aware {
        return Err(AnalysisError::Config(
            "answer-aware prompts cannot be truncated by sentence".into(),
        ));
    }
    let sentences = split_sentences(&paragraph.context);
    let n = sentences.len();
    if n < bounds.min_sentences.max(1) || n > bounds.max_sentences {
        return Err(AnalysisError::SentenceCount {
            paragraph_id: paragraph.id.clone(),
            sentences: n,
            min: bounds.min_sentences,
            max: bounds.max_sentences,
        });
    }
    let references: Vec<Vec<_>> = paragraph.qas.iter().map(|qa| tokenize_eval(&qa.question)).collect();
    if references.is_empty() {
        return Err(AnalysisError::NoReferences(paragraph.id.clone()));
    }

    let mut points = Vec::with_capacity(n);
    let mut error = None;
    for k in (1..=n).rev() {
        let context = sentences[..k].join(" ");
        let prompt = render_prompt(&context, cfg.delimiter);
        let session = params.for_session(&format!("{}@{k}", paragraph.id));
        let generated = match generate_question(backend, &prompt, &session, &paragraph.id) {
            Ok(q) => q,
            Err(e) => {
                log::warn!("reduction run for {} stopped at {k} sentences: {e}", paragraph.id);
                error = Some(format!("at {k} sentences: {e}"));
                break;
            }
        };
        let hyp = tokenize_eval(&generated.text);
        let hyp = tokens_as_strs(&hyp);
        let mut best = [0.0f64; 4];
        for r in &references {
            let scores = sentence_bleu_smoothed(&hyp, &tokens_as_strs(r), 4);
            for (b, s) in best.iter_mut().zip(scores) {
                *b = b.max(s);
            }
        }
        points.push(CurvePoint {
            sentence_count: k,
            bleu: best,
            generated: generated.text,
        });
    }
    points.reverse();
    Ok(ReductionCurve {
        paragraph_id: paragraph.id.clone(),
        points,
        error,
    })
}
