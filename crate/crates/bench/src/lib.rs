//! Synthetic inputs for the benchmarks.

use qgkit::dataset::{AnswerSpan, Article, ContextParagraph, QAPair, QADataset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const VOCAB: &[&str] = &[
    "the", "of", "and", "in", "to", "a", "was", "team", "game", "city", "river", "season", "first", "league",
    "played", "won", "which", "what", "who", "when", "where", "by", "for", "is", "century", "war", "king",
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sentence(rng: &mut impl Rng, len: usize) -> Vec<&'static str> {
    (0..len).map(|_| VOCAB[rng.random_range(0..VOCAB.len())]).collect()
}

/// `n` prediction/reference string pairs of 8 to 20 words.
pub fn corpus(seed: u64, n: usize) -> (Vec<String>, Vec<String>) {
    let mut r = rng(seed);
    (0..n)
        .map(|_| {
            let (la, lb) = (r.random_range(8..20), r.random_range(8..20));
            let a = sentence(&mut r, la).join(" ") + "?";
            let b = sentence(&mut r, lb).join(" ") + "?";
            (a, b)
        })
        .unzip()
}

/// Probabilities over `k` tokens with a long tail.
pub fn zipf_probabilities(k: usize) -> Vec<(String, f64)> {
    let raw: Vec<f64> = (1..=k).map(|i| 1.0 / i as f64).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().enumerate().map(|(i, w)| (format!("t{i}"), w / total)).collect()
}

/// A dataset of `paragraphs` paragraphs with `questions` questions each.
pub fn dataset(seed: u64, paragraphs: usize, questions: usize) -> QADataset {
    let mut r = rng(seed);
    let paragraphs = (0..paragraphs)
        .map(|pi| {
            let context = (0..6)
                .map(|_| sentence(&mut r, 20).join(" ") + ".")
                .collect::<Vec<_>>()
                .join(" ");
            let qas = (0..questions)
                .map(|_| QAPair {
                    question: sentence(&mut r, 10).join(" ") + "?",
                    answers: vec![AnswerSpan::new(&context, context[..3].to_string(), 0)],
                })
                .collect();
            ContextParagraph {
                id: format!("0/{pi}"),
                context,
                qas,
            }
        })
        .collect();
    QADataset {
        articles: vec![Article {
            title: "bench".into(),
            paragraphs,
        }],
    }
}
