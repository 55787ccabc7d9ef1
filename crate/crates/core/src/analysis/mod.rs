//! Diagnostics over generated questions: how much is copied from the context,
//! which interrogative type each question has, whether generation failed, and
//! how scores change as a context is shortened sentence by sentence.

mod reduction;
mod sentences;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decode::{FinishReason, PredictionRecord};
use crate::metrics::{lcs_length, tokenize_eval};

pub use reduction::{sentence_reduction_experiment, CurvePoint, ReductionBounds, ReductionCurve};
pub use sentences::split_sentences;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no questions to classify")]
    EmptyInput,
    #[error("paragraph {paragraph_id} has {sentences} sentence(s); allowed range is {min}..={max}")]
    SentenceCount {
        paragraph_id: String,
        sentences: usize,
        min: usize,
        max: usize,
    },
    #[error("paragraph {0} has no reference questions")]
    NoReferences(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown paragraph id {0}")]
    UnknownParagraph(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum QuestionType {
    Who,
    What,
    When,
    Where,
    Which,
    How,
    Why,
    Other,
}

impl QuestionType {
    fn from_keyword(word: &str) -> Option<QuestionType> {
        Some(match word {
            "who" | "whom" | "whose" => QuestionType::Who,
            "what" => QuestionType::What,
            "when" => QuestionType::When,
            "where" => QuestionType::Where,
            "which" => QuestionType::Which,
            "how" => QuestionType::How,
            "why" => QuestionType::Why,
            _ => return None,
        })
    }
}

impl fmt::Display for QuestionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            QuestionType::Who => "WHO",
            QuestionType::What => "WHAT",
            QuestionType::When => "WHEN",
            QuestionType::Where => "WHERE",
            QuestionType::Which => "WHICH",
            QuestionType::How => "HOW",
            QuestionType::Why => "WHY",
            QuestionType::Other => "OTHER",
        };
        f.write_str(s)
    }
}

impl FromStr for QuestionType {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "other" => Ok(QuestionType::Other),
            w => QuestionType::from_keyword(w).ok_or_else(|| AnalysisError::Config(format!("unknown question type `{s}`"))),
        }
    }
}

/// Assigns interrogative types and decides which count as identification
/// (factoid) questions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionClassifier {
    /// Number of leading word tokens searched for an interrogative keyword.
    pub window: usize,
    pub identification: BTreeSet<QuestionType>,
}

impl Default for QuestionClassifier {
    fn default() -> Self {
        Self {
            window: 2,
            identification: [QuestionType::Who, QuestionType::What, QuestionType::When, QuestionType::Where]
                .into_iter()
                .collect(),
        }
    }
}

impl QuestionClassifier {
    pub fn with_which(mut self) -> Self {
        self.identification.insert(QuestionType::Which);
        self
    }

    /// First interrogative keyword among the leading `window` word tokens;
    /// punctuation is skipped. Case-insensitive.
    pub fn classify(&self, question: &str) -> QuestionType {
        tokenize_eval(question)
            .iter()
            .filter(|t| t.as_str().chars().any(char::is_alphanumeric))
            .take(self.window)
            .find_map(|t| QuestionType::from_keyword(t.as_str()))
            .unwrap_or(QuestionType::Other)
    }

    pub fn is_identification(&self, question_type: QuestionType) -> bool {
        self.identification.contains(&question_type)
    }

    /// Fraction of questions whose type is in the identification set.
    pub fn identification_ratio<S: AsRef<str>>(&self, questions: &[S]) -> Result<f64, AnalysisError> {
        if questions.is_empty() {
            return Err(AnalysisError::EmptyInput);
        }
        let hits = questions
            .iter()
            .filter(|q| self.is_identification(self.classify(q.as_ref())))
            .count();
        Ok(hits as f64 / questions.len() as f64)
    }
}

/// Type of `question` under the default classifier.
pub fn classify_question_type(question: &str) -> QuestionType {
    QuestionClassifier::default().classify(question)
}

/// Identification ratio under the default classifier.
pub fn identification_ratio<S: AsRef<str>>(questions: &[S]) -> Result<f64, AnalysisError> {
    QuestionClassifier::default().identification_ratio(questions)
}

/// Number of evaluation tokens of `question` that appear, in order, in `context`.
pub fn context_copy_score(question: &str, context: &str) -> usize {
    let q = tokenize_eval(question);
    let c = tokenize_eval(context);
    lcs_length(&q, &c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FailureMode {
    None,
    RepetitionLoop,
    PrematureCutoff,
}

impl fmt::Display for FailureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureMode::None => "NONE",
            FailureMode::RepetitionLoop => "REPETITION_LOOP",
            FailureMode::PrematureCutoff => "PREMATURE_CUTOFF",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureDetector {
    /// Length of the repeated word n-gram.
    pub ngram: usize,
    /// Back-to-back occurrences needed to call it a loop.
    pub min_repeats: usize,
}

impl Default for FailureDetector {
    fn default() -> Self {
        Self { ngram: 3, min_repeats: 3 }
    }
}

fn words(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| {
            w.trim_matches(|c: char| !c.is_alphanumeric())
                .to_lowercase()
        })
        .filter(|w| !w.is_empty())
        .collect()
}

impl FailureDetector {
    /// True when some word n-gram occurs `min_repeats` times back to back.
    pub fn has_repetition_loop(&self, text: &str) -> bool {
        let n = self.ngram.max(1);
        let w = words(text);
        let needed = n * self.min_repeats.max(1);
        if w.len() < needed {
            return false;
        }
        (0..=w.len() - needed).any(|start| {
            let gram = &w[start..start + n];
            (1..self.min_repeats).all(|r| &w[start + r * n..start + (r + 1) * n] == gram)
        })
    }

    pub fn detect(&self, question: &str, finish_reason: FinishReason) -> FailureMode {
        if self.has_repetition_loop(question) {
            FailureMode::RepetitionLoop
        } else if finish_reason == FinishReason::LengthCap && !question.trim_end().ends_with('?') {
            FailureMode::PrematureCutoff
        } else {
            FailureMode::None
        }
    }
}

/// Failure mode under the default detector.
pub fn detect_failure(question: &str, finish_reason: FinishReason) -> FailureMode {
    FailureDetector::default().detect(question, finish_reason)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisRecord {
    pub paragraph_id: String,
    pub lcs_copy_len: usize,
    pub question_type: QuestionType,
    pub is_identification: bool,
    pub failure: FailureMode,
}

/// Per-run summary of a set of analysis records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisSummary {
    pub record_count: usize,
    pub mean_lcs_copy_len: f64,
    pub identification_ratio: f64,
    pub failure_counts: BTreeMap<FailureMode, usize>,
    pub failure_rate: f64,
    pub question_type_counts: BTreeMap<QuestionType, usize>,
}

#[derive(Debug, Clone, Default)]
pub struct Analyzer {
    pub classifier: QuestionClassifier,
    pub detector: FailureDetector,
}

impl Analyzer {
    pub fn record(&self, paragraph_id: &str, question: &str, finish_reason: FinishReason, context: &str) -> AnalysisRecord {
        let question_type = self.classifier.classify(question);
        AnalysisRecord {
            paragraph_id: paragraph_id.to_string(),
            lcs_copy_len: context_copy_score(question, context),
            question_type,
            is_identification: self.classifier.is_identification(question_type),
            failure: self.detector.detect(question, finish_reason),
        }
    }

    /// Analyzes predictions, looking up each context by paragraph id.
    pub fn analyze_predictions<'a, F>(
        &self,
        predictions: &[PredictionRecord],
        mut context_of: F,
    ) -> Result<Vec<AnalysisRecord>, AnalysisError>
    where
        F: FnMut(&str) -> Option<&'a str>,
    {
        predictions
            .iter()
            .map(|p| {
                let context = context_of(&p.paragraph_id)
                    .ok_or_else(|| AnalysisError::UnknownParagraph(p.paragraph_id.clone()))?;
                Ok(self.record(&p.paragraph_id, &p.generated, p.finish_reason, context))
            })
            .collect()
    }
}

pub fn summarize(records: &[AnalysisRecord]) -> Result<AnalysisSummary, AnalysisError> {
    if records.is_empty() {
        return Err(AnalysisError::EmptyInput);
    }
    let n = records.len() as f64;
    let mut failure_counts: BTreeMap<FailureMode, usize> =
        [FailureMode::None, FailureMode::RepetitionLoop, FailureMode::PrematureCutoff]
            .into_iter()
            .map(|m| (m, 0))
            .collect();
    let mut question_type_counts = BTreeMap::new();
    for r in records {
        *failure_counts.entry(r.failure).or_insert(0) += 1;
        *question_type_counts.entry(r.question_type).or_insert(0) += 1;
    }
    let failures = records.len() - failure_counts[&FailureMode::None];
    Ok(AnalysisSummary {
        record_count: records.len(),
        mean_lcs_copy_len: records.iter().map(|r| r.lcs_copy_len as f64).sum::<f64>() / n,
        identification_ratio: records.iter().filter(|r| r.is_identification).count() as f64 / n,
        failure_counts,
        failure_rate: failures as f64 / n,
        question_type_counts,
    })
}
