//! JSON bodies of the `POST /v1/generate` protocol spoken by model servers.

use serde::{Deserialize, Serialize};

use super::DecodeError;

pub const GENERATE_PATH: &str = "/v1/generate";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateRequest {
    pub prompt: String,
    pub temperature: f64,
    pub top_p: f64,
    pub max_new_tokens: usize,
    pub stop: Vec<String>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WireFinishReason {
    Stop,
    Length,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub completion: String,
    pub tokens: Vec<String>,
    pub finish_reason: WireFinishReason,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

impl GenerateResponse {
    /// Checks the reply against the request it answers.
    pub fn validate(&self, request: &GenerateRequest) -> Result<(), DecodeError> {
        if self.tokens.len() > request.max_new_tokens {
            return Err(DecodeError::Protocol(format!(
                "{} tokens returned for max_new_tokens = {}",
                self.tokens.len(),
                request.max_new_tokens
            )));
        }
        if self.finish_reason == WireFinishReason::Length && self.tokens.len() != request.max_new_tokens {
            return Err(DecodeError::Protocol(format!(
                "finish_reason \"length\" with {} of {} tokens",
                self.tokens.len(),
                request.max_new_tokens
            )));
        }
        Ok(())
    }
}

impl GenerateRequest {
    /// Checks the server-side preconditions of a request.
    pub fn validate(&self) -> Result<(), String> {
        if !self.temperature.is_finite() || self.temperature <= 0.0 {
            return Err("temperature must be > 0".into());
        }
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err("top_p must be in (0, 1]".into());
        }
        if self.max_new_tokens == 0 {
            return Err("max_new_tokens must be >= 1".into());
        }
        if self.stop.iter().any(String::is_empty) {
            return Err("stop strings must be non-empty".into());
        }
        Ok(())
    }
}
