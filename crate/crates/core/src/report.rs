//! Run manifests, aggregated report documents, run comparisons and CSV output
//! for BLEU-vs-context-length curves.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::analysis::{summarize, AnalysisError, AnalysisRecord, AnalysisSummary, FailureMode, QuestionType, ReductionCurve};
use crate::dataset::{DelimiterScheme, FormatConfig};
use crate::decode::{BackendDescriptor, GenerationParams};
use crate::metrics::{MetricVariant, ScoreReport};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("manifest mismatch between scores and analysis: {0}")]
    ManifestMismatch(String),
    #[error("metric variants differ in `{0}`; runs are not comparable")]
    VariantMismatch(&'static str),
    #[error("no analysis records")]
    Empty,
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

/// Everything that determined a run's outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub format_config: FormatConfig,
    pub generation_params: GenerationParams,
    pub backend_descriptor: BackendDescriptor,
    pub metric_variant: MetricVariant,
    /// SHA-256 of the source dataset bytes.
    pub dataset_fingerprint: String,
    /// Excluded from content hashes and manifest comparison.
    pub timestamp: String,
}

impl RunManifest {
    /// Equality ignoring the timestamp.
    pub fn same_run(&self, other: &RunManifest) -> Result<(), String> {
        if self.format_config != other.format_config {
            return Err("format_config".into());
        }
        if self.generation_params != other.generation_params {
            return Err("generation_params".into());
        }
        if self.backend_descriptor != other.backend_descriptor {
            return Err("backend_descriptor".into());
        }
        if let Some(field) = self.metric_variant.first_difference(&other.metric_variant) {
            return Err(format!("metric_variant.{field}"));
        }
        if self.dataset_fingerprint != other.dataset_fingerprint {
            return Err("dataset_fingerprint".into());
        }
        Ok(())
    }
}

pub fn dataset_fingerprint(raw: &[u8]) -> String {
    hex::encode(Sha256::digest(raw))
}

/// Output of the `evaluate` step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoresFile {
    pub schema_version: u32,
    pub manifest: RunManifest,
    pub scores: ScoreReport,
}

/// Output of the `analyze` step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisFile {
    pub schema_version: u32,
    pub manifest: RunManifest,
    pub summary: AnalysisSummary,
    pub records: Vec<AnalysisRecord>,
}

impl AnalysisFile {
    pub fn new(manifest: RunManifest, records: Vec<AnalysisRecord>) -> Result<Self, ReportError> {
        if records.is_empty() {
            return Err(ReportError::Empty);
        }
        Ok(Self {
            schema_version: SCHEMA_VERSION,
            summary: summarize(&records)?,
            manifest,
            records,
        })
    }
}

/// A row of transcribed published scores. METEOR is absent from some tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub label: String,
    pub bleu1: f64,
    pub bleu2: f64,
    pub bleu3: f64,
    pub bleu4: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meteor: Option<f64>,
    pub rouge_l: f64,
}

impl ReferenceRow {
    fn metrics(&self) -> Vec<(&'static str, f64)> {
        let mut m = vec![
            ("bleu1", self.bleu1),
            ("bleu2", self.bleu2),
            ("bleu3", self.bleu3),
            ("bleu4", self.bleu4),
        ];
        if let Some(v) = self.meteor {
            m.push(("meteor", v));
        }
        m.push(("rouge_l", self.rouge_l));
        m
    }
}

impl From<(&str, &ScoreReport)> for ReferenceRow {
    fn from((label, s): (&str, &ScoreReport)) -> Self {
        Self {
            label: label.to_string(),
            bleu1: s.bleu1,
            bleu2: s.bleu2,
            bleu3: s.bleu3,
            bleu4: s.bleu4,
            meteor: Some(s.meteor),
            rouge_l: s.rouge_l,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceConstants {
    pub mean_lcs_copy_len: f64,
    pub generated_identification_ratio: f64,
    pub train_identification_ratio: f64,
    pub generated_sample_size: usize,
    pub non_question_generations: usize,
}

/// Published numbers shipped with the toolkit for side-by-side display.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperReference {
    pub label: String,
    pub note: String,
    pub format_scores: Vec<ReferenceRow>,
    pub answer_awareness_scores: Vec<ReferenceRow>,
    pub constants: ReferenceConstants,
    pub anomalies: Vec<String>,
}

const PAPER_REFERENCE_JSON: &str = include_str!("paper_reference.json");

pub fn paper_reference() -> PaperReference {
    serde_json::from_str(PAPER_REFERENCE_JSON).expect("bundled reference constants parse")
}

impl PaperReference {
    pub fn format_row(&self, label: &str) -> Option<&ReferenceRow> {
        self.format_scores.iter().find(|r| r.label == label)
    }

    /// The published row for runs formatted with `cfg`, if there is one.
    pub fn row_for(&self, cfg: &FormatConfig) -> Option<&ReferenceRow> {
        if cfg.answer_aware {
            return self.answer_awareness_scores.iter().find(|r| r.label == "OQPL Answer-Aware");
        }
        let delim = match cfg.delimiter {
            DelimiterScheme::Artificial => "Artificial",
            DelimiterScheme::NaturalQuestion => "Question",
            DelimiterScheme::NaturalNumber => "Number",
        };
        self.format_row(&format!("{} {delim}", cfg.qpl_mode))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub manifest: RunManifest,
    pub scores: ScoreReport,
    pub record_count: usize,
    pub failure_counts: BTreeMap<FailureMode, usize>,
    pub failure_rate: f64,
    pub identification_ratio: f64,
    pub mean_lcs_copy_len: f64,
    pub question_type_counts: BTreeMap<QuestionType, usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paper_reference: Option<ReferenceRow>,
    /// SHA-256 over the document with this field and the manifest timestamp blanked.
    pub content_hash: String,
}

impl ReportDocument {
    fn compute_hash(&self) -> String {
        let mut copy = self.clone();
        copy.content_hash = String::new();
        copy.manifest.timestamp = String::new();
        let bytes = serde_json::to_vec(&copy).expect("report serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn verify_hash(&self) -> bool {
        self.compute_hash() == self.content_hash
    }
}

/// Combines scores and analysis of the same run into one report.
pub fn aggregate(
    scores: &ScoresFile,
    analysis: &AnalysisFile,
    reference: Option<&ReferenceRow>,
) -> Result<ReportDocument, ReportError> {
    if analysis.records.is_empty() {
        return Err(ReportError::Empty);
    }
    scores
        .manifest
        .same_run(&analysis.manifest)
        .map_err(ReportError::ManifestMismatch)?;
    let summary = summarize(&analysis.records)?;
    let mut doc = ReportDocument {
        schema_version: SCHEMA_VERSION,
        manifest: scores.manifest.clone(),
        scores: scores.scores,
        record_count: summary.record_count,
        failure_counts: summary.failure_counts,
        failure_rate: summary.failure_rate,
        identification_ratio: summary.identification_ratio,
        mean_lcs_copy_len: summary.mean_lcs_copy_len,
        question_type_counts: summary.question_type_counts,
        paper_reference: reference.cloned(),
        content_hash: String::new(),
    };
    doc.content_hash = doc.compute_hash();
    Ok(doc)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricDelta {
    pub metric: String,
    pub a: f64,
    pub b: f64,
    /// `b - a`
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub schema_version: u32,
    pub a_label: String,
    pub b_label: String,
    pub deltas: Vec<MetricDelta>,
}

impl Comparison {
    pub fn delta(&self, metric: &str) -> Option<f64> {
        self.deltas.iter().find(|d| d.metric == metric).map(|d| d.delta)
    }
}

/// Per-metric `b - a` over the metrics both rows carry.
pub fn compare_rows(a: &ReferenceRow, b: &ReferenceRow) -> Comparison {
    let b_metrics: BTreeMap<&str, f64> = b.metrics().into_iter().collect();
    let deltas = a
        .metrics()
        .into_iter()
        .filter_map(|(name, av)| {
            b_metrics.get(name).map(|&bv| MetricDelta {
                metric: name.to_string(),
                a: av,
                b: bv,
                delta: bv - av,
            })
        })
        .collect();
    Comparison {
        schema_version: SCHEMA_VERSION,
        a_label: a.label.clone(),
        b_label: b.label.clone(),
        deltas,
    }
}

fn run_label(doc: &ReportDocument) -> String {
    let f = &doc.manifest.format_config;
    format!(
        "{} {}{}",
        f.qpl_mode,
        f.delimiter,
        if f.answer_aware { " answer-aware" } else { "" }
    )
}

/// Side-by-side deltas between two reports scored with the same metric variant.
pub fn compare_runs(a: &ReportDocument, b: &ReportDocument) -> Result<Comparison, ReportError> {
    if let Some(field) = a.manifest.metric_variant.first_difference(&b.manifest.metric_variant) {
        return Err(ReportError::VariantMismatch(field));
    }
    let ra = ReferenceRow::from((run_label(a).as_str(), &a.scores));
    let rb = ReferenceRow::from((run_label(b).as_str(), &b.scores));
    Ok(compare_rows(&ra, &rb))
}

/// A paragraph left out of the reduction experiment.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedParagraph {
    pub paragraph_id: String,
    pub reason: String,
}

/// Output of the `reduce-context` step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvesFile {
    pub schema_version: u32,
    pub manifest: RunManifest,
    pub curves: Vec<ReductionCurve>,
    pub skipped: Vec<SkippedParagraph>,
}

pub const CURVE_HEADER: [&str; 6] = ["paragraph_id", "sentence_count", "bleu1", "bleu2", "bleu3", "bleu4"];
/// `paragraph_id` value of the per-sentence-count mean rows.
pub const MEAN_ROW_ID: &str = "__mean__";

/// Mean BLEU_1..4 at each sentence count across curves.
pub fn mean_by_sentence_count(curves: &[ReductionCurve]) -> BTreeMap<usize, [f64; 4]> {
    let mut sums: BTreeMap<usize, ([f64; 4], usize)> = BTreeMap::new();
    for c in curves {
        for p in &c.points {
            let e = sums.entry(p.sentence_count).or_insert(([0.0; 4], 0));
            for (s, v) in e.0.iter_mut().zip(p.bleu) {
                *s += v;
            }
            e.1 += 1;
        }
    }
    sums.into_iter()
        .map(|(k, (s, n))| (k, s.map(|v| v / n as f64)))
        .collect()
}

/// Writes the data rows followed by one mean row per sentence count.
/// Returns the number of rows written, excluding the header.
pub fn write_curve_csv<W: Write>(curves: &[ReductionCurve], w: W) -> Result<usize, ReportError> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CURVE_HEADER)?;
    let mut rows = 0;
    for c in curves {
        for p in &c.points {
            out.write_record(row(&c.paragraph_id, p.sentence_count, &p.bleu))?;
            rows += 1;
        }
    }
    for (k, means) in mean_by_sentence_count(curves) {
        out.write_record(row(MEAN_ROW_ID, k, &means))?;
        rows += 1;
    }
    out.flush().map_err(csv::Error::from)?;
    Ok(rows)
}

fn row(id: &str, k: usize, bleu: &[f64; 4]) -> Vec<String> {
    let mut r = vec![id.to_string(), k.to_string()];
    r.extend(bleu.iter().map(|v| v.to_string()));
    r
}

pub fn emit_curve_csv(curves: &[ReductionCurve], destination: &Path) -> Result<usize, ReportError> {
    let file = File::create(destination).map_err(|source| ReportError::Io {
        path: destination.to_path_buf(),
        source,
    })?;
    write_curve_csv(curves, file)
}
