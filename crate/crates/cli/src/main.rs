use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use qgkit::analysis::{sentence_reduction_experiment, split_sentences, Analyzer, ReductionBounds};
use qgkit::dataset::{
    build_examples, emit_lm_text, parse_squad, reference_records, render_delimiter, render_prompt, DelimiterScheme,
    FormatConfig, QADataset, QplMode, ReferenceRecord,
};
use qgkit::decode::{
    generate_batch, read_predictions, write_predictions, Backend, GenerationJob, GenerationParams, HttpBackend,
    MockBackend, MockScript, PredictionRecord,
};
use qgkit::metrics::{score_corpus, MetricVariant};
use qgkit::report::{
    aggregate, compare_runs, dataset_fingerprint, emit_curve_csv, paper_reference, AnalysisFile, CurvesFile,
    ReportDocument, RunManifest, ScoresFile, SkippedParagraph, SCHEMA_VERSION,
};

#[derive(Parser)]
#[command(name = "qgkit", version, about = "Question generation data, decoding, scoring and diagnostics")]
struct Cli {
    /// Repeat for more log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Turn SQuAD v1.1 JSON into line-per-example LM training text.
    Format(FormatArgs),
    /// Generate one question per prompt.
    Generate(GenerateArgs),
    /// Score predictions against reference questions.
    Evaluate(EvaluateArgs),
    /// Copy length, question types and failure modes of predictions.
    Analyze(AnalyzeArgs),
    /// BLEU as a function of the number of context sentences.
    ReduceContext(ReduceArgs),
    /// Build, compare or export reports.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Qpl {
    Oqpl,
    Aqpl,
}

impl From<Qpl> for QplMode {
    fn from(q: Qpl) -> Self {
        match q {
            Qpl::Oqpl => QplMode::Oqpl,
            Qpl::Aqpl => QplMode::Aqpl,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Delim {
    Artificial,
    Question,
    Number,
}

impl From<Delim> for DelimiterScheme {
    fn from(d: Delim) -> Self {
        match d {
            Delim::Artificial => DelimiterScheme::Artificial,
            Delim::Question => DelimiterScheme::NaturalQuestion,
            Delim::Number => DelimiterScheme::NaturalNumber,
        }
    }
}

#[derive(Args)]
struct FormatArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    qpl: Qpl,
    #[arg(long, value_enum)]
    delim: Delim,
    /// Mark the first answer span with [ANSS] / [ANSE] (OQPL only).
    #[arg(long)]
    answer_aware: bool,
    #[arg(long)]
    output: PathBuf,
    /// Write span-verification warnings here as a JSON list.
    #[arg(long)]
    warnings: Option<PathBuf>,
    /// Write one JSONL reference record per question, in OQPL order.
    #[arg(long)]
    references: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum BackendChoice {
    /// In-process stochastic context copier.
    Mock,
    /// A model server speaking POST /v1/generate.
    Http,
}

#[derive(Args)]
struct BackendArgs {
    #[arg(long, value_enum, default_value = "mock")]
    backend: BackendChoice,
    /// Server base URL, required with --backend http.
    #[arg(long)]
    endpoint: Option<String>,
}

impl BackendArgs {
    fn build(&self) -> Result<Box<dyn Backend>> {
        match (self.backend, &self.endpoint) {
            (BackendChoice::Mock, _) => Ok(Box::new(MockBackend::new(MockScript::ContextCopy))),
            (BackendChoice::Http, Some(url)) => Ok(Box::new(HttpBackend::new(url.as_str())?)),
            (BackendChoice::Http, None) => bail!("--backend http needs --endpoint"),
        }
    }
}

#[derive(Args)]
struct SamplingArgs {
    #[arg(long, default_value_t = 0.6)]
    temperature: f64,
    #[arg(long, default_value_t = 0.9)]
    top_p: f64,
    #[arg(long, default_value_t = 32)]
    max_tokens: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SamplingArgs {
    fn params(&self) -> Result<GenerationParams> {
        let params = GenerationParams {
            temperature: self.temperature,
            top_p: self.top_p,
            max_new_tokens: self.max_tokens,
            rng_seed: self.seed,
            ..Default::default()
        };
        params.validate()?;
        Ok(params)
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// SQuAD JSON (one prompt per question) or a text file with one context per line.
    #[arg(long)]
    contexts: PathBuf,
    #[arg(long, value_enum, default_value = "oqpl")]
    qpl: Qpl,
    #[arg(long, value_enum, default_value = "artificial")]
    delim: Delim,
    #[command(flatten)]
    backend: BackendArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
    /// Concurrent generation sessions.
    #[arg(long, default_value_t = 4)]
    max_in_flight: usize,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    predictions: PathBuf,
    /// JSONL reference records as written by `format --references`.
    #[arg(long)]
    references: PathBuf,
    /// Run manifest; defaults to the predictions' sidecar.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    predictions: PathBuf,
    /// SQuAD JSON the predictions were generated from.
    #[arg(long)]
    contexts: PathBuf,
    /// Count WHICH questions as identification questions.
    #[arg(long)]
    include_which: bool,
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
struct ReduceArgs {
    #[arg(long)]
    contexts: PathBuf,
    #[arg(long, default_value_t = 2)]
    min_sentences: usize,
    #[arg(long, default_value_t = 30)]
    max_sentences: usize,
    #[arg(long, value_enum, default_value = "artificial")]
    delim: Delim,
    #[command(flatten)]
    backend: BackendArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
    #[arg(long)]
    output: PathBuf,
}

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true)]
struct ReportArgs {
    #[command(subcommand)]
    action: Option<ReportAction>,
    #[arg(long)]
    scores: Option<PathBuf>,
    #[arg(long)]
    analysis: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Leave out the matching published row.
    #[arg(long)]
    no_reference: bool,
}

#[derive(Subcommand)]
enum ReportAction {
    /// Per-metric deltas (b - a) between two reports.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export reduction curves as CSV with per-count mean rows.
    Curves {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn load_squad(path: &Path) -> Result<(QADataset, Vec<u8>)> {
    let raw = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let parsed = parse_squad(&raw).with_context(|| format!("parsing {}", path.display()))?;
    if !parsed.warnings.is_empty() {
        log::warn!("{}: {} answer spans failed verification", path.display(), parsed.warnings.len());
    }
    Ok((parsed.dataset, raw))
}

fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn load_manifest(explicit: Option<&Path>, predictions: &Path) -> Result<RunManifest> {
    let path = explicit.map_or_else(|| manifest_path(predictions), Path::to_path_buf);
    read_json(&path).with_context(|| "run manifest not found; pass --manifest or keep the sidecar written by `generate`")
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn looks_like_json(raw: &[u8]) -> bool {
    raw.iter().find(|b| !b.is_ascii_whitespace()) == Some(&b'{')
}

fn format(args: FormatArgs) -> Result<()> {
    let cfg = FormatConfig::new(args.qpl.into(), args.delim.into(), args.answer_aware)?;
    let raw = fs::read(&args.input).with_context(|| format!("reading {}", args.input.display()))?;
    let parsed = parse_squad(&raw).with_context(|| format!("parsing {}", args.input.display()))?;
    let examples = build_examples(&parsed.dataset, &cfg)?;
    let bytes = emit_lm_text(&examples, &args.output)?;
    if let Some(path) = &args.warnings {
        write_json(path, &parsed.warnings)?;
    }
    if let Some(path) = &args.references {
        write_jsonl(path, &reference_records(&parsed.dataset))?;
    }
    let counts = parsed.dataset.counts();
    println!(
        "{} lines, {bytes} bytes ({} paragraphs, {} questions, {} span warnings)",
        examples.len(),
        counts.paragraphs,
        counts.questions,
        parsed.warnings.len()
    );
    Ok(())
}

fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).with_context(|| format!("{}:{}", path.display(), i + 1)))
        .collect()
}

fn prompt_jobs(raw: &[u8], path: &Path, delim: DelimiterScheme) -> Result<Vec<GenerationJob>> {
    if looks_like_json(raw) {
        let ds = parse_squad(raw).with_context(|| format!("parsing {}", path.display()))?.dataset;
        // One job per question so predictions align with `format --references`.
        return Ok(ds
            .paragraphs()
            .flat_map(|p| {
                let prompt = render_prompt(&p.context, delim);
                p.qas.iter().map(move |_| GenerationJob {
                    paragraph_id: p.id.clone(),
                    prompt: prompt.clone(),
                })
            })
            .collect());
    }
    let text = std::str::from_utf8(raw).with_context(|| format!("{} is not UTF-8", path.display()))?;
    let marker = render_delimiter(delim, 1);
    Ok(text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| GenerationJob {
            paragraph_id: format!("line/{}", i + 1),
            prompt: if line.trim_end().ends_with(&marker) {
                line.trim_end().to_string()
            } else {
                render_prompt(line, delim)
            },
        })
        .collect())
}

fn generate(args: GenerateArgs) -> Result<()> {
    let params = args.sampling.params()?;
    let cfg = FormatConfig::new(args.qpl.into(), args.delim.into(), false)?;
    let raw = fs::read(&args.contexts).with_context(|| format!("reading {}", args.contexts.display()))?;
    let jobs = prompt_jobs(&raw, &args.contexts, cfg.delimiter)?;
    ensure!(!jobs.is_empty(), "no prompts in {}", args.contexts.display());
    let backend = args.backend.build()?;
    let manifest = RunManifest {
        format_config: cfg,
        generation_params: params.clone(),
        backend_descriptor: backend.descriptor(),
        metric_variant: MetricVariant::default(),
        dataset_fingerprint: dataset_fingerprint(&raw),
        timestamp: now(),
    };
    log::info!("generating {} questions", jobs.len());
    let results = generate_batch(backend.as_ref(), &jobs, &params, args.max_in_flight)?;
    let mut records = Vec::with_capacity(jobs.len());
    for (job, result) in jobs.iter().zip(results) {
        let q = result.with_context(|| format!("generation failed for {}", job.paragraph_id))?;
        records.push(PredictionRecord::new(&job.prompt, &q));
    }
    let file = File::create(&args.output).with_context(|| format!("creating {}", args.output.display()))?;
    write_predictions(&records, BufWriter::new(file))?;
    write_json(&manifest_path(&args.output), &manifest)?;
    println!("{} predictions written to {}", records.len(), args.output.display());
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let preds = read_predictions(BufReader::new(
        File::open(&args.predictions).with_context(|| format!("opening {}", args.predictions.display()))?,
    ))?;
    let refs: Vec<ReferenceRecord> = read_jsonl(&args.references)?;
    ensure!(
        preds.len() == refs.len(),
        "{} predictions but {} references",
        preds.len(),
        refs.len()
    );
    for (i, (p, r)) in preds.iter().zip(&refs).enumerate() {
        ensure!(
            p.paragraph_id == r.paragraph_id,
            "line {}: prediction for {} aligned with reference for {}",
            i + 1,
            p.paragraph_id,
            r.paragraph_id
        );
    }
    let mut manifest = load_manifest(args.manifest.as_deref(), &args.predictions)?;
    manifest.metric_variant = MetricVariant::default();
    let p: Vec<&str> = preds.iter().map(|p| p.generated.as_str()).collect();
    let r: Vec<&str> = refs.iter().map(|r| r.question.as_str()).collect();
    let scores = score_corpus(&p, &r)?;
    write_json(
        &args.output,
        &ScoresFile {
            schema_version: SCHEMA_VERSION,
            manifest,
            scores,
        },
    )?;
    println!(
        "BLEU1-4 {:.2} {:.2} {:.2} {:.2}  METEOR {:.2}  ROUGE_L {:.2}  (n = {})",
        scores.bleu1, scores.bleu2, scores.bleu3, scores.bleu4, scores.meteor, scores.rouge_l, scores.prediction_count
    );
    Ok(())
}

fn analyze(args: AnalyzeArgs) -> Result<()> {
    let preds = read_predictions(BufReader::new(
        File::open(&args.predictions).with_context(|| format!("opening {}", args.predictions.display()))?,
    ))?;
    let (ds, raw) = load_squad(&args.contexts)?;
    let manifest = load_manifest(args.manifest.as_deref(), &args.predictions)?;
    if manifest.dataset_fingerprint != dataset_fingerprint(&raw) {
        log::warn!("{} differs from the dataset the predictions were generated from", args.contexts.display());
    }
    let mut analyzer = Analyzer::default();
    if args.include_which {
        analyzer.classifier = analyzer.classifier.with_which();
    }
    let records = analyzer.analyze_predictions(&preds, |id| ds.paragraph(id).map(|p| p.context.as_str()))?;
    let file = AnalysisFile::new(manifest, records)?;
    write_json(&args.output, &file)?;
    let s = &file.summary;
    println!(
        "{} records: mean copy length {:.2}, identification {:.2}%, failures {:.2}%",
        s.record_count,
        s.mean_lcs_copy_len,
        100.0 * s.identification_ratio,
        100.0 * s.failure_rate
    );
    Ok(())
}

fn reduce_context(args: ReduceArgs) -> Result<()> {
    let params = args.sampling.params()?;
    let cfg = FormatConfig::new(QplMode::Oqpl, args.delim.into(), false)?;
    let bounds = ReductionBounds {
        min_sentences: args.min_sentences,
        max_sentences: args.max_sentences,
    };
    ensure!(
        bounds.min_sentences <= bounds.max_sentences,
        "--min-sentences exceeds --max-sentences"
    );
    let (ds, raw) = load_squad(&args.contexts)?;
    let backend = args.backend.build()?;
    let mut curves = Vec::new();
    let mut skipped = Vec::new();
    for para in ds.paragraphs() {
        let n = split_sentences(&para.context).len();
        if n < bounds.min_sentences.max(1) || n > bounds.max_sentences || para.qas.is_empty() {
            skipped.push(SkippedParagraph {
                paragraph_id: para.id.clone(),
                reason: if para.qas.is_empty() {
                    "no reference questions".into()
                } else {
                    format!("{n} sentences")
                },
            });
            continue;
        }
        let curve = sentence_reduction_experiment(para, backend.as_ref(), &params, &cfg, bounds)?;
        if let Some(e) = &curve.error {
            log::warn!("{}: {e}", para.id);
        }
        curves.push(curve);
    }
    let manifest = RunManifest {
        format_config: cfg,
        generation_params: params,
        backend_descriptor: backend.descriptor(),
        metric_variant: MetricVariant {
            bleu_smoothing: format!("additive-epsilon:{}", qgkit::metrics::SMOOTHING_EPSILON),
            ..MetricVariant::default()
        },
        dataset_fingerprint: dataset_fingerprint(&raw),
        timestamp: now(),
    };
    let incomplete = curves.iter().filter(|c| c.error.is_some()).count();
    let file = CurvesFile {
        schema_version: SCHEMA_VERSION,
        manifest,
        curves,
        skipped,
    };
    write_json(&args.output, &file)?;
    println!(
        "{} curves ({incomplete} incomplete), {} paragraphs skipped",
        file.curves.len(),
        file.skipped.len()
    );
    Ok(())
}

fn report(args: ReportArgs) -> Result<()> {
    match args.action {
        Some(ReportAction::Compare { a, b, out }) => {
            let ra: ReportDocument = read_json(&a)?;
            let rb: ReportDocument = read_json(&b)?;
            for (path, doc) in [(&a, &ra), (&b, &rb)] {
                if !doc.verify_hash() {
                    log::warn!("{}: content hash does not match its contents", path.display());
                }
            }
            let cmp = compare_runs(&ra, &rb)?;
            match out {
                Some(path) => write_json(&path, &cmp)?,
                None => println!("{}", serde_json::to_string_pretty(&cmp)?),
            }
            Ok(())
        }
        Some(ReportAction::Curves { input, out }) => {
            let file: CurvesFile = read_json(&input)?;
            let rows = emit_curve_csv(&file.curves, &out)?;
            println!("{rows} rows written to {}", out.display());
            Ok(())
        }
        None => {
            let (Some(scores), Some(analysis), Some(out)) = (args.scores, args.analysis, args.out) else {
                bail!("report needs --scores, --analysis and --out (or a `compare` / `curves` subcommand)");
            };
            let scores: ScoresFile = read_json(&scores)?;
            let analysis: AnalysisFile = read_json(&analysis)?;
            let published = paper_reference();
            let reference = if args.no_reference {
                None
            } else {
                published.row_for(&scores.manifest.format_config)
            };
            let doc = aggregate(&scores, &analysis, reference)?;
            write_json(&out, &doc)?;
            println!("report {} written to {}", doc.content_hash, out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Format(a) => format(a),
        Command::Generate(a) => generate(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Analyze(a) => analyze(a),
        Command::ReduceContext(a) => reduce_context(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
