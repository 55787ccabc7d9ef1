use serde::{Deserialize, Serialize};

pub(crate) const TOKENIZER_ID: &str = "lowercase-whitespace-punct";

/// A lowercased token produced by [`tokenize_eval`]. Never empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EvalToken(String);

impl EvalToken {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for EvalToken {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// Lowercases, splits on whitespace and splits every punctuation character
/// into its own token.
pub fn tokenize_eval(text: &str) -> Vec<EvalToken> {
    let mut out = Vec::new();
    for word in text.split_whitespace() {
        let mut current = String::new();
        for ch in word.chars() {
            if ch.is_ascii_punctuation() || (!ch.is_alphanumeric() && !ch.is_ascii()) {
                if !current.is_empty() {
                    out.push(EvalToken(std::mem::take(&mut current)));
                }
                out.push(EvalToken(ch.to_lowercase().collect()));
            } else {
                current.extend(ch.to_lowercase());
            }
        }
        if !current.is_empty() {
            out.push(EvalToken(current));
        }
    }
    out
}

pub fn tokens_as_strs(tokens: &[EvalToken]) -> Vec<&str> {
    tokens.iter().map(EvalToken::as_str).collect()
}
