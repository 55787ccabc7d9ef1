//! SQuAD-schema parsing and rendering into line-per-example language-modeling text.
//!
//! A training example is a context paragraph followed by one or more questions,
//! each introduced by a delimiter:
//!
//! ```text
//! <context> [SEP] <question 1> [SEP] <question 2>
//! ```
//!
//! Segments are joined with single spaces. Newlines inside contexts are
//! replaced with spaces so that one example always occupies one line.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Artificial delimiter token.
pub const SEP_TOKEN: &str = "[SEP]";
/// Natural-language delimiter word.
pub const QUESTION_WORD: &str = "Question:";
/// Answer-start tag inserted before a marked span.
pub const ANSWER_START_TAG: &str = "[ANSS]";
/// Answer-end tag inserted after a marked span.
pub const ANSWER_END_TAG: &str = "[ANSE]";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("malformed JSON at byte {offset} (line {line}, column {column}): {message}")]
    Json {
        offset: usize,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema mismatch: missing or invalid field `{path}`")]
    Schema { path: String },
    #[error("invalid format configuration: {0}")]
    Config(String),
    #[error("answer span at char {start} is not verified against its context")]
    UnverifiedSpan { start: usize },
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QADataset {
    pub articles: Vec<Article>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Article {
    pub title: String,
    pub paragraphs: Vec<ContextParagraph>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextParagraph {
    /// `<article index>/<paragraph index>`, stable across re-parses of the same file.
    pub id: String,
    pub context: String,
    pub qas: Vec<QAPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAPair {
    pub question: String,
    pub answers: Vec<AnswerSpan>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerSpan {
    pub text: String,
    /// Offset in Unicode scalar values, not bytes.
    pub start_char: usize,
    pub verified: bool,
}

impl AnswerSpan {
    /// Builds a span and checks it against `context`.
    pub fn new(context: &str, text: impl Into<String>, start_char: usize) -> Self {
        let text = text.into();
        let verified = span_matches(context, &text, start_char);
        Self {
            text,
            start_char,
            verified,
        }
    }
}

/// A problem found while parsing, reported instead of dropping data.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseWarning {
    pub paragraph_id: String,
    pub question_index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetCounts {
    pub articles: usize,
    pub paragraphs: usize,
    pub questions: usize,
    pub answers: usize,
    pub unverified_answers: usize,
}

impl QADataset {
    pub fn paragraphs(&self) -> impl Iterator<Item = &ContextParagraph> {
        self.articles.iter().flat_map(|a| a.paragraphs.iter())
    }

    pub fn paragraph(&self, id: &str) -> Option<&ContextParagraph> {
        self.paragraphs().find(|p| p.id == id)
    }

    pub fn question_count(&self) -> usize {
        self.paragraphs().map(|p| p.qas.len()).sum()
    }

    pub fn paragraph_count(&self) -> usize {
        self.articles.iter().map(|a| a.paragraphs.len()).sum()
    }

    pub fn counts(&self) -> DatasetCounts {
        let mut counts = DatasetCounts {
            articles: self.articles.len(),
            ..Default::default()
        };
        for p in self.paragraphs() {
            counts.paragraphs += 1;
            counts.questions += p.qas.len();
            for qa in &p.qas {
                counts.answers += qa.answers.len();
                counts.unverified_answers += qa.answers.iter().filter(|a| !a.verified).count();
            }
        }
        counts
    }
}

/// Output of [`parse_squad`]: the dataset plus every span or shape warning.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedDataset {
    pub dataset: QADataset,
    pub warnings: Vec<ParseWarning>,
}

fn span_matches(context: &str, text: &str, start_char: usize) -> bool {
    let mut chars = context.chars().skip(start_char);
    let mut expected = text.chars();
    loop {
        match (expected.next(), chars.next()) {
            (None, _) => return true,
            (Some(e), Some(c)) if e == c => {}
            _ => return false,
        }
    }
}

fn field<'a>(
    obj: &'a serde_json::Map<String, serde_json::Value>,
    key: &str,
    path: &str,
) -> Result<&'a serde_json::Value, DatasetError> {
    obj.get(key).ok_or_else(|| DatasetError::Schema {
        path: format!("{path}.{key}"),
    })
}

fn as_object<'a>(
    v: &'a serde_json::Value,
    path: &str,
) -> Result<&'a serde_json::Map<String, serde_json::Value>, DatasetError> {
    v.as_object().ok_or_else(|| DatasetError::Schema {
        path: path.to_string(),
    })
}

fn as_array<'a>(v: &'a serde_json::Value, path: &str) -> Result<&'a Vec<serde_json::Value>, DatasetError> {
    v.as_array().ok_or_else(|| DatasetError::Schema {
        path: path.to_string(),
    })
}

fn as_str<'a>(v: &'a serde_json::Value, path: &str) -> Result<&'a str, DatasetError> {
    v.as_str().ok_or_else(|| DatasetError::Schema {
        path: path.to_string(),
    })
}

fn byte_offset(raw: &[u8], line: usize, column: usize) -> usize {
    // serde_json reports 1-based line and column (column counted in bytes).
    let mut offset = 0;
    for (i, l) in raw.split(|&b| b == b'\n').enumerate() {
        if i + 1 == line {
            return offset + column.saturating_sub(1).min(l.len());
        }
        offset += l.len() + 1;
    }
    raw.len()
}

/// Parses SQuAD v1.1 JSON.
///
/// Paragraphs with no questions, empty contexts and empty questions are kept
/// and reported as warnings. Answer spans whose text does not match the
/// context at `answer_start` are kept with `verified = false`.
pub fn parse_squad(raw: &[u8]) -> Result<ParsedDataset, DatasetError> {
    let root: serde_json::Value = serde_json::from_slice(raw).map_err(|e| DatasetError::Json {
        offset: byte_offset(raw, e.line(), e.column()),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let root = as_object(&root, "$")?;
    let data = as_array(field(root, "data", "$")?, "$.data")?;

    let mut articles = Vec::with_capacity(data.len());
    let mut warnings = Vec::new();
    for (ai, article) in data.iter().enumerate() {
        let apath = format!("$.data[{ai}]");
        let article = as_object(article, &apath)?;
        let title = match article.get("title") {
            Some(t) => as_str(t, &format!("{apath}.title"))?.to_string(),
            None => String::new(),
        };
        let paragraphs_raw = as_array(field(article, "paragraphs", &apath)?, &format!("{apath}.paragraphs"))?;
        let mut paragraphs = Vec::with_capacity(paragraphs_raw.len());
        for (pi, paragraph) in paragraphs_raw.iter().enumerate() {
            let ppath = format!("{apath}.paragraphs[{pi}]");
            let paragraph = as_object(paragraph, &ppath)?;
            let context = as_str(field(paragraph, "context", &ppath)?, &format!("{ppath}.context"))?;
            let qas_raw = as_array(field(paragraph, "qas", &ppath)?, &format!("{ppath}.qas"))?;
            let id = format!("{ai}/{pi}");
            if context.trim().is_empty() {
                warnings.push(ParseWarning {
                    paragraph_id: id.clone(),
                    question_index: 0,
                    reason: "empty context".into(),
                });
            }
            if qas_raw.is_empty() {
                warnings.push(ParseWarning {
                    paragraph_id: id.clone(),
                    question_index: 0,
                    reason: "paragraph has no questions".into(),
                });
            }
            let mut qas = Vec::with_capacity(qas_raw.len());
            for (qi, qa) in qas_raw.iter().enumerate() {
                let qpath = format!("{ppath}.qas[{qi}]");
                let qa = as_object(qa, &qpath)?;
                let question = as_str(field(qa, "question", &qpath)?, &format!("{qpath}.question"))?;
                if question.trim().is_empty() {
                    warnings.push(ParseWarning {
                        paragraph_id: id.clone(),
                        question_index: qi,
                        reason: "empty question".into(),
                    });
                }
                let answers_raw = as_array(field(qa, "answers", &qpath)?, &format!("{qpath}.answers"))?;
                let mut answers = Vec::with_capacity(answers_raw.len());
                for (ni, answer) in answers_raw.iter().enumerate() {
                    let npath = format!("{qpath}.answers[{ni}]");
                    let answer = as_object(answer, &npath)?;
                    let text = as_str(field(answer, "text", &npath)?, &format!("{npath}.text"))?;
                    let start = field(answer, "answer_start", &npath)?
                        .as_u64()
                        .ok_or_else(|| DatasetError::Schema {
                            path: format!("{npath}.answer_start"),
                        })? as usize;
                    let span = AnswerSpan::new(context, text, start);
                    if !span.verified {
                        warnings.push(ParseWarning {
                            paragraph_id: id.clone(),
                            question_index: qi,
                            reason: format!(
                                "answer {ni} text {text:?} does not match context at char {start}"
                            ),
                        });
                    }
                    answers.push(span);
                }
                qas.push(QAPair {
                    question: question.to_string(),
                    answers,
                });
            }
            paragraphs.push(ContextParagraph {
                id,
                context: context.to_string(),
                qas,
            });
        }
        articles.push(Article { title, paragraphs });
    }
    let dataset = QADataset { articles };
    log::debug!("parsed SQuAD dataset: {:?}", dataset.counts());
    Ok(ParsedDataset { dataset, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum QplMode {
    /// All questions of a paragraph on one line.
    Aqpl,
    /// One (context, question) pair per line.
    Oqpl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DelimiterScheme {
    Artificial,
    NaturalQuestion,
    NaturalNumber,
}

impl DelimiterScheme {
    pub const ALL: [DelimiterScheme; 3] = [
        DelimiterScheme::Artificial,
        DelimiterScheme::NaturalQuestion,
        DelimiterScheme::NaturalNumber,
    ];
}

impl FromStr for QplMode {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "aqpl" => Ok(QplMode::Aqpl),
            "oqpl" => Ok(QplMode::Oqpl),
            other => Err(DatasetError::Config(format!("unknown QPL mode `{other}`"))),
        }
    }
}

impl FromStr for DelimiterScheme {
    type Err = DatasetError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "artificial" => Ok(DelimiterScheme::Artificial),
            "question" | "natural_question" => Ok(DelimiterScheme::NaturalQuestion),
            "number" | "natural_number" => Ok(DelimiterScheme::NaturalNumber),
            other => Err(DatasetError::Config(format!("unknown delimiter scheme `{other}`"))),
        }
    }
}

impl fmt::Display for QplMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            QplMode::Aqpl => "AQPL",
            QplMode::Oqpl => "OQPL",
        })
    }
}

impl fmt::Display for DelimiterScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DelimiterScheme::Artificial => "ARTIFICIAL",
            DelimiterScheme::NaturalQuestion => "NATURAL_QUESTION",
            DelimiterScheme::NaturalNumber => "NATURAL_NUMBER",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FormatConfig {
    pub qpl_mode: QplMode,
    pub delimiter: DelimiterScheme,
    pub answer_aware: bool,
}

impl FormatConfig {
    pub fn new(qpl_mode: QplMode, delimiter: DelimiterScheme, answer_aware: bool) -> Result<Self, DatasetError> {
        let cfg = Self {
            qpl_mode,
            delimiter,
            answer_aware,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.answer_aware && self.qpl_mode != QplMode::Oqpl {
            return Err(DatasetError::Config(
                "answer-aware tagging requires OQPL".to_string(),
            ));
        }
        Ok(())
    }

    /// The six combinations without answer tagging.
    pub fn all_plain() -> Vec<FormatConfig> {
        [QplMode::Aqpl, QplMode::Oqpl]
            .into_iter()
            .flat_map(|q| {
                DelimiterScheme::ALL.into_iter().map(move |d| FormatConfig {
                    qpl_mode: q,
                    delimiter: d,
                    answer_aware: false,
                })
            })
            .collect()
    }
}

impl Default for FormatConfig {
    fn default() -> Self {
        Self {
            qpl_mode: QplMode::Oqpl,
            delimiter: DelimiterScheme::Artificial,
            answer_aware: false,
        }
    }
}

/// Renders the delimiter preceding the `question_ordinal`-th question (1-based).
pub fn render_delimiter(scheme: DelimiterScheme, question_ordinal: usize) -> String {
    debug_assert!(question_ordinal >= 1);
    match scheme {
        DelimiterScheme::Artificial => SEP_TOKEN.to_string(),
        DelimiterScheme::NaturalQuestion => QUESTION_WORD.to_string(),
        DelimiterScheme::NaturalNumber => format!("{question_ordinal}."),
    }
}

/// Inserts `[ANSS] ` before and ` [ANSE]` after the span.
pub fn mark_answer_span(context: &str, span: &AnswerSpan) -> Result<String, DatasetError> {
    if !span.verified || !span_matches(context, &span.text, span.start_char) {
        return Err(DatasetError::UnverifiedSpan {
            start: span.start_char,
        });
    }
    let start = char_to_byte(context, span.start_char);
    let end = start + span.text.len();
    let mut out = String::with_capacity(context.len() + 14);
    out.push_str(&context[..start]);
    out.push_str(ANSWER_START_TAG);
    out.push(' ');
    out.push_str(&context[start..end]);
    out.push(' ');
    out.push_str(ANSWER_END_TAG);
    out.push_str(&context[end..]);
    Ok(out)
}

fn char_to_byte(s: &str, char_idx: usize) -> usize {
    s.char_indices().nth(char_idx).map_or(s.len(), |(b, _)| b)
}

/// Replaces every line break (`\r\n`, `\n`, `\r`) with a single space.
pub fn normalize_context(context: &str) -> String {
    context.replace("\r\n", " ").replace(['\n', '\r'], " ")
}

fn normalize_question(q: &str) -> String {
    normalize_context(q)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub line: String,
    pub source_paragraph_id: String,
    pub source_question_indices: Vec<usize>,
}

/// Renders the prompt that invokes question generation: `context ⟨delim 1⟩`.
pub fn render_prompt(context: &str, scheme: DelimiterScheme) -> String {
    format!("{} {}", normalize_context(context), render_delimiter(scheme, 1))
}

fn render_line(context: &str, questions: &[&str], scheme: DelimiterScheme) -> String {
    let mut line = normalize_context(context);
    for (i, q) in questions.iter().enumerate() {
        line.push(' ');
        line.push_str(&render_delimiter(scheme, i + 1));
        line.push(' ');
        line.push_str(&normalize_question(q));
    }
    line
}

/// Flattens a dataset into training lines under `cfg`.
pub fn build_examples(ds: &QADataset, cfg: &FormatConfig) -> Result<Vec<TrainingExample>, DatasetError> {
    cfg.validate()?;
    let mut out = Vec::new();
    for p in ds.paragraphs() {
        if p.qas.is_empty() {
            continue;
        }
        match cfg.qpl_mode {
            QplMode::Oqpl => {
                for (qi, qa) in p.qas.iter().enumerate() {
                    let context = if cfg.answer_aware {
                        let span = qa.answers.first().ok_or_else(|| {
                            DatasetError::Config(format!(
                                "answer-aware formatting needs an answer for question {qi} of paragraph {}",
                                p.id
                            ))
                        })?;
                        mark_answer_span(&p.context, span)?
                    } else {
                        p.context.clone()
                    };
                    out.push(TrainingExample {
                        line: render_line(&context, &[qa.question.as_str()], cfg.delimiter),
                        source_paragraph_id: p.id.clone(),
                        source_question_indices: vec![qi],
                    });
                }
            }
            QplMode::Aqpl => {
                let questions: Vec<&str> = p.qas.iter().map(|qa| qa.question.as_str()).collect();
                out.push(TrainingExample {
                    line: render_line(&p.context, &questions, cfg.delimiter),
                    source_paragraph_id: p.id.clone(),
                    source_question_indices: (0..p.qas.len()).collect(),
                });
            }
        }
    }
    Ok(out)
}

/// Splits a rendered line back into its context and questions.
///
/// Splitting happens on ` ⟨delim k⟩ ` for k = 1, 2, …; the search for the first
/// delimiter starts from the end of the context, so context text that happens to
/// contain the delimiter does not confuse the split as long as the caller
/// supplies the expected question count.
pub fn split_example(line: &str, scheme: DelimiterScheme, question_count: usize) -> Option<(String, Vec<String>)> {
    if question_count == 0 {
        return Some((line.to_string(), Vec::new()));
    }
    // Walk backwards: the last delimiter precedes the last question.
    let mut questions = Vec::with_capacity(question_count);
    let mut rest = line;
    for ordinal in (1..=question_count).rev() {
        let marker = format!(" {} ", render_delimiter(scheme, ordinal));
        let pos = rest.rfind(&marker)?;
        questions.push(rest[pos + marker.len()..].to_string());
        rest = &rest[..pos];
    }
    questions.reverse();
    Some((rest.to_string(), questions))
}

/// The gold question behind one OQPL example, used as an evaluation reference.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReferenceRecord {
    pub paragraph_id: String,
    pub question_index: usize,
    pub question: String,
}

/// One record per question, in the order `build_examples` emits OQPL lines.
pub fn reference_records(ds: &QADataset) -> Vec<ReferenceRecord> {
    ds.paragraphs()
        .flat_map(|p| {
            p.qas.iter().enumerate().map(|(i, qa)| ReferenceRecord {
                paragraph_id: p.id.clone(),
                question_index: i,
                question: qa.question.clone(),
            })
        })
        .collect()
}

/// Writes one example per line, each terminated by `\n`. Returns the byte count.
pub fn emit_lm_text(examples: &[TrainingExample], destination: &Path) -> Result<u64, DatasetError> {
    let io_err = |source| DatasetError::Io {
        path: destination.to_path_buf(),
        source,
    };
    let file = File::create(destination).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    let n = write_lm_text(examples, &mut w).map_err(io_err)?;
    w.flush().map_err(io_err)?;
    Ok(n)
}

pub fn write_lm_text<W: Write>(examples: &[TrainingExample], w: &mut W) -> std::io::Result<u64> {
    let mut n = 0u64;
    for ex in examples {
        debug_assert!(!ex.line.contains('\n'));
        w.write_all(ex.line.as_bytes())?;
        w.write_all(b"\n")?;
        n += ex.line.len() as u64 + 1;
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> QADataset {
        let ctx = "abc def. ghi";
        QADataset {
            articles: vec![Article {
                title: "t".into(),
                paragraphs: vec![ContextParagraph {
                    id: "0/0".into(),
                    context: ctx.into(),
                    qas: vec![
                        QAPair {
                            question: "What is abc?".into(),
                            answers: vec![AnswerSpan::new(ctx, "def", 4)],
                        },
                        QAPair {
                            question: "Where is ghi?".into(),
                            answers: vec![AnswerSpan::new(ctx, "ghi", 9)],
                        },
                    ],
                }],
            }],
        }
    }

    #[test]
    fn references_follow_oqpl_order() {
        let ds = tiny();
        let refs = reference_records(&ds);
        let lines = build_examples(&ds, &FormatConfig::default()).unwrap();
        assert_eq!(refs.len(), lines.len());
        for (r, l) in refs.iter().zip(&lines) {
            assert_eq!(l.source_question_indices, vec![r.question_index]);
            assert!(l.line.ends_with(&r.question));
        }
    }

    #[test]
    fn empty_data_parses() {
        let parsed = parse_squad(br#"{"data":[]}"#).unwrap();
        assert_eq!(parsed.dataset.paragraph_count(), 0);
        assert!(parsed.warnings.is_empty());
    }

    #[test]
    fn malformed_json_reports_offset() {
        let raw = b"{\"data\": [\n  {\"title\": }\n]}";
        match parse_squad(raw) {
            Err(DatasetError::Json { offset, line, .. }) => {
                assert_eq!(line, 2);
                assert!(offset > 11 && offset < raw.len(), "offset {offset}");
            }
            other => panic!("expected JSON error, got {other:?}"),
        }
    }

    #[test]
    fn missing_field_names_path() {
        let raw = br#"{"data":[{"title":"x","paragraphs":[{"context":"c","qas":[{"question":"q?"}]}]}]}"#;
        match parse_squad(raw) {
            Err(DatasetError::Schema { path }) => {
                assert_eq!(path, "$.data[0].paragraphs[0].qas[0].answers")
            }
            other => panic!("expected schema error, got {other:?}"),
        }
        match parse_squad(br#"{"version":"1.1"}"#) {
            Err(DatasetError::Schema { path }) => assert_eq!(path, "$.data"),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn mismatched_span_is_flagged_not_dropped() {
        let raw = br#"{"data":[{"title":"x","paragraphs":[{"context":"hello world","qas":[
            {"question":"q?","answers":[{"text":"world","answer_start":0}]}]}]}]}"#;
        let parsed = parse_squad(raw).unwrap();
        assert_eq!(parsed.warnings.len(), 1);
        assert_eq!(parsed.warnings[0].paragraph_id, "0/0");
        let span = &parsed.dataset.articles[0].paragraphs[0].qas[0].answers[0];
        assert!(!span.verified);
        assert_eq!(parsed.dataset.counts().unverified_answers, 1);
    }

    #[test]
    fn unicode_offsets_are_scalar_values() {
        let ctx = "Beyoncé Giselle Knowles";
        let span = AnswerSpan::new(ctx, "Giselle", 8);
        assert!(span.verified);
        assert_eq!(
            mark_answer_span(ctx, &span).unwrap(),
            "Beyoncé [ANSS] Giselle [ANSE] Knowles"
        );
    }

    #[test]
    fn delimiters() {
        assert_eq!(render_delimiter(DelimiterScheme::Artificial, 1), "[SEP]");
        assert_eq!(render_delimiter(DelimiterScheme::NaturalNumber, 3), "3.");
        assert_eq!(render_delimiter(DelimiterScheme::NaturalQuestion, 7), "Question:");
    }

    #[test]
    fn mark_span_boundaries() {
        let ctx = "abc def";
        assert_eq!(
            mark_answer_span(ctx, &AnswerSpan::new(ctx, "abc", 0)).unwrap(),
            "[ANSS] abc [ANSE] def"
        );
        assert_eq!(
            mark_answer_span(ctx, &AnswerSpan::new(ctx, "abc def", 0)).unwrap(),
            "[ANSS] abc def [ANSE]"
        );
        let bad = AnswerSpan::new(ctx, "xyz", 0);
        assert!(matches!(
            mark_answer_span(ctx, &bad),
            Err(DatasetError::UnverifiedSpan { start: 0 })
        ));
    }

    #[test]
    fn answer_aware_requires_oqpl() {
        assert!(FormatConfig::new(QplMode::Aqpl, DelimiterScheme::Artificial, true).is_err());
        let cfg = FormatConfig {
            qpl_mode: QplMode::Aqpl,
            delimiter: DelimiterScheme::Artificial,
            answer_aware: true,
        };
        assert!(matches!(build_examples(&tiny(), &cfg), Err(DatasetError::Config(_))));
    }

    #[test]
    fn aqpl_number_ordinals() {
        let cfg = FormatConfig::new(QplMode::Aqpl, DelimiterScheme::NaturalNumber, false).unwrap();
        let ex = build_examples(&tiny(), &cfg).unwrap();
        assert_eq!(ex.len(), 1);
        assert_eq!(ex[0].line, "abc def. ghi 1. What is abc? 2. Where is ghi?");
        assert_eq!(ex[0].source_question_indices, vec![0, 1]);
        let (ctx, qs) = split_example(&ex[0].line, DelimiterScheme::NaturalNumber, 2).unwrap();
        assert_eq!(ctx, "abc def. ghi");
        assert_eq!(qs, vec!["What is abc?", "Where is ghi?"]);
    }

    #[test]
    fn oqpl_number_resets_per_example() {
        let cfg = FormatConfig::new(QplMode::Oqpl, DelimiterScheme::NaturalNumber, false).unwrap();
        let ex = build_examples(&tiny(), &cfg).unwrap();
        assert_eq!(ex[0].line, "abc def. ghi 1. What is abc?");
        assert_eq!(ex[1].line, "abc def. ghi 1. Where is ghi?");
    }

    #[test]
    fn answer_aware_uses_first_answer() {
        let cfg = FormatConfig::new(QplMode::Oqpl, DelimiterScheme::Artificial, true).unwrap();
        let ex = build_examples(&tiny(), &cfg).unwrap();
        assert_eq!(ex[0].line, "abc [ANSS] def [ANSE]. ghi [SEP] What is abc?");
        assert_eq!(ex[1].line, "abc def. [ANSS] ghi [ANSE] [SEP] Where is ghi?");
    }

    #[test]
    fn newlines_become_spaces() {
        let mut ds = tiny();
        ds.articles[0].paragraphs[0].context = "line one\nline two\r\nthree".into();
        let ex = build_examples(&ds, &FormatConfig::default()).unwrap();
        assert!(ex.iter().all(|e| !e.line.contains('\n') && !e.line.contains('\r')));
        assert!(ex[0].line.starts_with("line one line two three [SEP] "));
    }

    #[test]
    fn emit_sizes() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        assert_eq!(emit_lm_text(&[], &path).unwrap(), 0);
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 0);

        let ex = build_examples(&tiny(), &FormatConfig::default()).unwrap();
        let (a, b) = (ex[0].line.len() as u64, ex[1].line.len() as u64);
        assert_eq!(emit_lm_text(&ex, &path).unwrap(), a + b + 2);
        let first = std::fs::read(&path).unwrap();
        emit_lm_text(&ex, &path).unwrap();
        assert_eq!(first, std::fs::read(&path).unwrap());
    }

    #[test]
    fn emit_reports_path_on_failure() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("missing").join("out.txt");
        match emit_lm_text(&[], &path) {
            Err(DatasetError::Io { path: p, .. }) => assert_eq!(p, path),
            other => panic!("expected I/O error, got {other:?}"),
        }
    }
}
