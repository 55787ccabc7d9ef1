//! Toolkit for paragraph-level question generation with a decoder-only
//! language model.
//!
//! - [`dataset`]: SQuAD parsing and line-per-example training text.
//! - [`decode`]: temperature / top-p sampling and the generation loop.
//! - [`metrics`]: BLEU_1–4, ROUGE_L, METEOR and the LCS kernel.
//! - [`analysis`]: context copying, question types, failure modes and the
//!   sentence-reduction experiment.
//! - [`report`]: run manifests, aggregated reports and plot-ready curves.

pub mod analysis;
pub mod dataset;
pub mod decode;
pub mod metrics;
pub mod report;

pub use analysis::{AnalysisRecord, FailureMode, QuestionType, ReductionCurve};
pub use dataset::{DelimiterScheme, FormatConfig, QADataset, QplMode, TrainingExample};
pub use decode::{Backend, FinishReason, GeneratedQuestion, GenerationParams, MockBackend};
pub use metrics::ScoreReport;
pub use report::{ReportDocument, RunManifest};
