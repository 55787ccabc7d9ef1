use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::wire::{ErrorBody, GenerateRequest, GenerateResponse, GENERATE_PATH};
use super::{DecodeError, TokenDistribution, DEFAULT_TIMEOUT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum BackendKind {
    Mock,
    Http,
}

/// Where temperature/top-p sampling happens.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SamplingLocus {
    Client,
    Server,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackendDescriptor {
    pub kind: BackendKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
    pub sampling_locus: SamplingLocus,
}

impl BackendDescriptor {
    pub fn mock() -> Self {
        Self {
            kind: BackendKind::Mock,
            endpoint: None,
            sampling_locus: SamplingLocus::Client,
        }
    }

    pub fn validate(&self) -> Result<(), DecodeError> {
        match (self.kind, &self.endpoint, self.sampling_locus) {
            (BackendKind::Mock, _, SamplingLocus::Server) => Err(DecodeError::InvalidParams(
                "mock backends sample on the client".into(),
            )),
            (BackendKind::Http, None, _) => Err(DecodeError::InvalidParams("HTTP backend needs an endpoint".into())),
            _ => Ok(()),
        }
    }
}

/// A language model that can either score the next token (client-side
/// sampling) or run a whole completion itself (server-side sampling).
pub trait Backend: Send + Sync {
    fn descriptor(&self) -> BackendDescriptor;

    /// Scores for the token following `prompt` + `generated`.
    fn next_distribution(&self, _prompt: &str, _generated: &[String]) -> Result<TokenDistribution, DecodeError> {
        Err(DecodeError::Unsupported("per-step distributions"))
    }

    fn complete(&self, _request: &GenerateRequest) -> Result<GenerateResponse, DecodeError> {
        Err(DecodeError::Unsupported("server-side completion"))
    }
}

/// Behaviour of a [`MockBackend`].
#[derive(Debug, Clone, PartialEq)]
pub enum MockScript {
    /// Emits the tokens in order, then a newline forever.
    Sequence(Vec<String>),
    /// Repeats the tokens forever.
    Cycle(Vec<String>),
    /// Emits `text` split into whitespace-led pieces, then a newline.
    Echo(String),
    /// Returns the same distribution at every step.
    Fixed(TokenDistribution),
    /// A stochastic question writer that copies words from the prompt's
    /// context and ends with `?` and a newline.
    ContextCopy,
}

/// In-process backend with scripted output, used in tests and dry runs.
#[derive(Debug, Clone)]
pub struct MockBackend {
    script: MockScript,
}

impl MockBackend {
    pub fn new(script: MockScript) -> Self {
        Self { script }
    }

    pub fn echo(text: impl Into<String>) -> Self {
        Self::new(MockScript::Echo(text.into()))
    }
}

/// Splits text into pieces that each carry their leading whitespace, in the
/// style of byte-level BPE tokens: `"Who won?"` → `["Who", " won", "?"]`.
pub fn mock_tokenize(text: &str) -> Vec<String> {
    let mut pieces = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        let boundary = ch.is_whitespace() && !current.trim().is_empty()
            || (ch.is_ascii_punctuation() && !current.trim().is_empty());
        if boundary {
            pieces.push(std::mem::take(&mut current));
        }
        current.push(ch);
    }
    if !current.is_empty() {
        pieces.push(current);
    }
    pieces
}

fn certain(token: &str) -> Result<TokenDistribution, DecodeError> {
    TokenDistribution::logits([(token, 0.0)])
}

fn context_words(prompt: &str) -> Vec<&str> {
    let mut words: Vec<&str> = prompt.split_whitespace().collect();
    // Drop the trailing delimiter.
    words.pop();
    words
}

fn context_copy_step(prompt: &str, generated: &[String]) -> Result<TokenDistribution, DecodeError> {
    const COPY_LEN: usize = 6;
    if generated.last().is_some_and(|t| t == "?") {
        return TokenDistribution::logits([("\n", 4.0), (" What", -2.0)]);
    }
    if generated.is_empty() {
        return TokenDistribution::logits([(" What", 2.0), (" Which", 1.0), (" Who", 0.5), (" When", 0.2)]);
    }
    let words = context_words(prompt);
    let pos = generated.len() - 1;
    let question_mark = if pos >= COPY_LEN { 3.0 } else { -1.0 };
    let mut entries: Vec<(String, f64)> = vec![("?".to_string(), question_mark)];
    for (offset, logit) in [(0usize, 2.0), (1, 0.5)] {
        if let Some(w) = words.get(pos + offset) {
            let token = format!(" {}", w.trim_matches(|c: char| c.is_ascii_punctuation()));
            if token.trim().is_empty() || entries.iter().any(|(t, _)| *t == token) {
                continue;
            }
            entries.push((token, logit));
        }
    }
    TokenDistribution::logits(entries)
}

impl Backend for MockBackend {
    fn descriptor(&self) -> BackendDescriptor {
        BackendDescriptor::mock()
    }

    fn next_distribution(&self, prompt: &str, generated: &[String]) -> Result<TokenDistribution, DecodeError> {
        let step = generated.len();
        match &self.script {
            MockScript::Sequence(tokens) => certain(tokens.get(step).map_or("\n", String::as_str)),
            MockScript::Cycle(tokens) => {
                if tokens.is_empty() {
                    return Err(DecodeError::EmptyDistribution);
                }
                certain(&tokens[step % tokens.len()])
            }
            MockScript::Echo(text) => {
                let pieces = mock_tokenize(text);
                certain(pieces.get(step).map_or("\n", String::as_str))
            }
            MockScript::Fixed(dist) => Ok(dist.clone()),
            MockScript::ContextCopy => context_copy_step(prompt, generated),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            initial_backoff: Duration::from_millis(250),
        }
    }
}

/// Client for a model server speaking the `/v1/generate` protocol. Sampling
/// happens on the server; parameters are forwarded verbatim.
#[derive(Debug, Clone)]
pub struct HttpBackend {
    endpoint: String,
    client: reqwest::blocking::Client,
    retry: RetryPolicy,
}

impl HttpBackend {
    pub fn new(endpoint: impl Into<String>) -> Result<Self, DecodeError> {
        Self::with_retry(endpoint, RetryPolicy::default())
    }

    pub fn with_retry(endpoint: impl Into<String>, retry: RetryPolicy) -> Result<Self, DecodeError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(DEFAULT_TIMEOUT)
            .build()
            .map_err(|e| DecodeError::InvalidParams(format!("HTTP client: {e}")))?;
        Ok(Self {
            endpoint: endpoint.into().trim_end_matches('/').to_string(),
            client,
            retry,
        })
    }

    fn url(&self) -> String {
        if self.endpoint.ends_with(GENERATE_PATH) {
            self.endpoint.clone()
        } else {
            format!("{}{}", self.endpoint, GENERATE_PATH)
        }
    }

    fn attempt(&self, request: &GenerateRequest) -> Result<GenerateResponse, Attempt> {
        let resp = self
            .client
            .post(self.url())
            .json(request)
            .send()
            .map_err(|e| Attempt::Retry(e.to_string()))?;
        let status = resp.status();
        let body = resp.text().map_err(|e| Attempt::Retry(e.to_string()))?;
        if status.is_success() {
            return serde_json::from_str(&body).map_err(|e| Attempt::Fatal(DecodeError::Protocol(e.to_string())));
        }
        let message = serde_json::from_str::<ErrorBody>(&body).map_or(body, |b| b.error);
        if status.is_server_error() {
            Err(Attempt::Retry(format!("HTTP {}: {message}", status.as_u16())))
        } else {
            Err(Attempt::Fatal(DecodeError::Backend {
                status: status.as_u16(),
                message,
            }))
        }
    }
}

enum Attempt {
    Retry(String),
    Fatal(DecodeError),
}

impl Backend for HttpBackend {
    fn descriptor(&self) -> BackendDescriptor {
        BackendDescriptor {
            kind: super::BackendKind::Http,
            endpoint: Some(self.endpoint.clone()),
            sampling_locus: SamplingLocus::Server,
        }
    }

    fn complete(&self, request: &GenerateRequest) -> Result<GenerateResponse, DecodeError> {
        let mut backoff = self.retry.initial_backoff;
        let attempts = self.retry.attempts.max(1);
        let mut last = String::new();
        for attempt in 1..=attempts {
            match self.attempt(request) {
                Ok(resp) => return Ok(resp),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(message)) => {
                    log::warn!("generate attempt {attempt}/{attempts} failed: {message}");
                    last = message;
                    if attempt < attempts {
                        thread::sleep(backoff);
                        backoff *= 2;
                    }
                }
            }
        }
        Err(DecodeError::Transport {
            attempts,
            message: last,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mock_tokenize_keeps_leading_space() {
        assert_eq!(mock_tokenize("Who won the game?"), ["Who", " won", " the", " game", "?"]);
        assert_eq!(mock_tokenize("Levi's"), ["Levi", "'s"]);
        assert_eq!(mock_tokenize("").len(), 0);
        assert_eq!(mock_tokenize("a b?").concat(), "a b?");
    }

    #[test]
    fn descriptor_invariants() {
        assert!(BackendDescriptor::mock().validate().is_ok());
        let bad = BackendDescriptor {
            kind: BackendKind::Mock,
            endpoint: None,
            sampling_locus: SamplingLocus::Server,
        };
        assert!(bad.validate().is_err());
        let http = HttpBackend::new("http://127.0.0.1:1").unwrap().descriptor();
        assert_eq!(http.sampling_locus, SamplingLocus::Server);
        assert!(http.validate().is_ok());
    }

    #[test]
    fn context_copy_is_a_valid_distribution_every_step() {
        let prompt = "Super Bowl 50 was an American football game. [SEP]";
        let mut generated: Vec<String> = Vec::new();
        for _ in 0..12 {
            let d = context_copy_step(prompt, &generated).unwrap();
            assert!(!d.is_empty());
            generated.push(d.argmax().unwrap().to_string());
        }
        assert_eq!(generated[0], " What");
        assert_eq!(generated[1], " Super");
    }
}
