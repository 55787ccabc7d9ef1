//! Sampling-based question generation over a pluggable model backend.
//!
//! Each step takes the backend's next-token scores, applies temperature,
//! truncates to the top-p nucleus and samples. Generation stops when the stop
//! text is produced or after `max_new_tokens` draws.

mod backend;
mod sampling;
pub mod wire;

use std::fmt;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use backend::{mock_tokenize, Backend, BackendDescriptor, BackendKind, HttpBackend, MockBackend, MockScript, RetryPolicy, SamplingLocus};
pub use sampling::{apply_temperature, nucleus_filter, sample_token, SamplerRng, TokenDistribution, WeightKind};

#[derive(Debug, Error)]
pub enum DecodeError {
    #[error("invalid generation parameters: {0}")]
    InvalidParams(String),
    #[error("invalid token distribution: {0}")]
    InvalidDistribution(String),
    #[error("cannot sample from an empty distribution")]
    EmptyDistribution,
    #[error("backend transport failed after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("backend returned HTTP {status}: {message}")]
    Backend { status: u16, message: String },
    #[error("malformed backend reply: {0}")]
    Protocol(String),
    #[error("backend does not support {0}")]
    Unsupported(&'static str),
}

impl DecodeError {
    pub fn is_retryable(&self) -> bool {
        matches!(self, DecodeError::Transport { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationParams {
    pub temperature: f64,
    pub top_p: f64,
    /// Backend (subword) tokens, not whitespace words.
    pub max_new_tokens: usize,
    pub stop_text: String,
    pub rng_seed: u64,
}

impl Default for GenerationParams {
    fn default() -> Self {
        Self {
            temperature: 0.6,
            top_p: 0.9,
            max_new_tokens: 32,
            stop_text: "\n".to_string(),
            rng_seed: 0,
        }
    }
}

impl GenerationParams {
    pub fn validate(&self) -> Result<(), DecodeError> {
        if !self.temperature.is_finite() || self.temperature <= 0.0 {
            return Err(DecodeError::InvalidParams(format!(
                "temperature must be > 0, got {}",
                self.temperature
            )));
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(DecodeError::InvalidParams(format!(
                "top_p must be in (0, 1], got {}",
                self.top_p
            )));
        }
        if self.max_new_tokens == 0 {
            return Err(DecodeError::InvalidParams("max_new_tokens must be >= 1".into()));
        }
        if self.stop_text.is_empty() {
            return Err(DecodeError::InvalidParams("stop_text must not be empty".into()));
        }
        Ok(())
    }

    /// Parameters for one session, with the seed mixed with the paragraph id so
    /// that results do not depend on scheduling order.
    pub fn for_session(&self, session_key: &str) -> GenerationParams {
        GenerationParams {
            rng_seed: session_seed(self.rng_seed, session_key),
            ..self.clone()
        }
    }
}

/// `seed XOR h(key)` where `h` is the first 8 bytes of SHA-256, little endian.
pub fn session_seed(seed: u64, key: &str) -> u64 {
    let digest = Sha256::digest(key.as_bytes());
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    seed ^ u64::from_le_bytes(bytes)
}

/// Hex SHA-256 of a prompt.
pub fn prompt_hash(prompt: &str) -> String {
    hex::encode(Sha256::digest(prompt.as_bytes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum FinishReason {
    StopSequence,
    LengthCap,
}

impl fmt::Display for FinishReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FinishReason::StopSequence => "STOP_SEQUENCE",
            FinishReason::LengthCap => "LENGTH_CAP",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedQuestion {
    pub text: String,
    pub finish_reason: FinishReason,
    pub tokens_emitted: usize,
    pub paragraph_id: String,
}

/// Runs one generation session.
///
/// `prompt` must already end with the rendered delimiter. The stop text is
/// never part of the result; the draw that produces it is not counted in
/// `tokens_emitted`, but it does use up one of the `max_new_tokens` draws.
pub fn generate_question(
    backend: &dyn Backend,
    prompt: &str,
    params: &GenerationParams,
    paragraph_id: &str,
) -> Result<GeneratedQuestion, DecodeError> {
    params.validate()?;
    let descriptor = backend.descriptor();
    let (text, finish_reason, tokens_emitted) = match descriptor.sampling_locus {
        SamplingLocus::Client => client_loop(backend, prompt, params)?,
        SamplingLocus::Server => server_call(backend, prompt, params)?,
    };
    Ok(GeneratedQuestion {
        text: text.trim().to_string(),
        finish_reason,
        tokens_emitted,
        paragraph_id: paragraph_id.to_string(),
    })
}

fn client_loop(
    backend: &dyn Backend,
    prompt: &str,
    params: &GenerationParams,
) -> Result<(String, FinishReason, usize), DecodeError> {
    let mut rng = SamplerRng::seeded(params.rng_seed);
    let mut tokens: Vec<String> = Vec::with_capacity(params.max_new_tokens);
    let mut text = String::new();
    for _ in 0..params.max_new_tokens {
        let scores = backend.next_distribution(prompt, &tokens)?;
        let probs = apply_temperature(&scores, params.temperature)?;
        let nucleus = nucleus_filter(&probs, params.top_p)?;
        let token = sample_token(&nucleus, &mut rng)?;
        // The stop text may straddle the boundary between tokens.
        let mut search_from = text.len().saturating_sub(params.stop_text.len() - 1);
        while !text.is_char_boundary(search_from) {
            search_from -= 1;
        }
        text.push_str(&token);
        if let Some(pos) = text[search_from..].find(&params.stop_text) {
            text.truncate(search_from + pos);
            return Ok((text, FinishReason::StopSequence, tokens.len()));
        }
        tokens.push(token);
    }
    Ok((text, FinishReason::LengthCap, tokens.len()))
}

fn server_call(
    backend: &dyn Backend,
    prompt: &str,
    params: &GenerationParams,
) -> Result<(String, FinishReason, usize), DecodeError> {
    let request = wire::GenerateRequest {
        prompt: prompt.to_string(),
        temperature: params.temperature,
        top_p: params.top_p,
        max_new_tokens: params.max_new_tokens,
        stop: vec![params.stop_text.clone()],
        seed: params.rng_seed,
    };
    let response = backend.complete(&request)?;
    response.validate(&request)?;
    let mut text = response.completion;
    let mut finish = match response.finish_reason {
        wire::WireFinishReason::Stop => FinishReason::StopSequence,
        wire::WireFinishReason::Length => FinishReason::LengthCap,
    };
    if let Some(pos) = text.find(&params.stop_text) {
        text.truncate(pos);
        finish = FinishReason::StopSequence;
    }
    let mut emitted = response.tokens.len();
    if response
        .tokens
        .last()
        .is_some_and(|t| t.contains(&params.stop_text))
    {
        emitted -= 1;
        finish = FinishReason::StopSequence;
    }
    Ok((text, finish, emitted))
}

/// A prompt to generate from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationJob {
    pub paragraph_id: String,
    pub prompt: String,
}

/// Runs independent sessions with at most `max_in_flight` concurrently.
/// Each session is seeded from `params.rng_seed` and its job's paragraph id
/// (plus the job index, so duplicated paragraphs get distinct streams).
/// Output order follows input order.
pub fn generate_batch(
    backend: &dyn Backend,
    jobs: &[GenerationJob],
    params: &GenerationParams,
    max_in_flight: usize,
) -> Result<Vec<Result<GeneratedQuestion, DecodeError>>, DecodeError> {
    params.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(max_in_flight.max(1))
        .build()
        .map_err(|e| DecodeError::InvalidParams(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        jobs.par_iter()
            .enumerate()
            .map(|(i, job)| {
                let session = params.for_session(&format!("{}#{i}", job.paragraph_id));
                generate_question(backend, &job.prompt, &session, &job.paragraph_id)
            })
            .collect()
    }))
}

/// One line of the predictions JSONL file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub paragraph_id: String,
    pub prompt_hash: String,
    pub generated: String,
    pub finish_reason: FinishReason,
    pub tokens_emitted: usize,
}

impl PredictionRecord {
    pub fn new(prompt: &str, q: &GeneratedQuestion) -> Self {
        Self {
            paragraph_id: q.paragraph_id.clone(),
            prompt_hash: prompt_hash(prompt),
            generated: q.text.clone(),
            finish_reason: q.finish_reason,
            tokens_emitted: q.tokens_emitted,
        }
    }
}

/// Writes one JSON object per line.
pub fn write_predictions<W: std::io::Write>(records: &[PredictionRecord], mut w: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Reads a predictions JSONL stream, skipping blank lines.
pub fn read_predictions<R: std::io::BufRead>(r: R) -> Result<Vec<PredictionRecord>, DecodeError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(|e| DecodeError::Protocol(format!("line {}: {e}", i + 1)))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| DecodeError::Protocol(format!("line {}: {e}", i + 1)))?,
        );
    }
    Ok(out)
}

pub(crate) const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);
