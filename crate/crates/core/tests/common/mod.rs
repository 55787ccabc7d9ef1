//! Independent reference implementations and fixture helpers shared by the
//! integration tests. Nothing here calls into the library's metric code.

#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn read_fixture(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Question count of SQuAD v1.1 train, as published with the dataset.
pub const SQUAD_TRAIN_QUESTIONS: usize = 87_599;

/// Location of the SQuAD v1.1 train file, if one is available.
pub fn squad_train_path() -> Option<PathBuf> {
    if let Some(p) = std::env::var_os("QGKIT_SQUAD_TRAIN") {
        return Some(PathBuf::from(p)).filter(|p| p.is_file());
    }
    let default = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/train-v1.1.json");
    default.is_file().then_some(default)
}

/// Counts paragraphs and questions by walking the raw JSON tree.
pub fn count_by_walk(raw: &[u8]) -> (usize, usize) {
    let v: serde_json::Value = serde_json::from_slice(raw).expect("valid JSON");
    let mut paragraphs = 0;
    let mut questions = 0;
    for article in v["data"].as_array().expect("data array") {
        for p in article["paragraphs"].as_array().expect("paragraphs array") {
            paragraphs += 1;
            questions += p["qas"].as_array().expect("qas array").len();
        }
    }
    (paragraphs, questions)
}

/// All questions in a SQuAD file, by tree walk.
pub fn questions_by_walk(raw: &[u8]) -> Vec<String> {
    let v: serde_json::Value = serde_json::from_slice(raw).expect("valid JSON");
    let mut out = Vec::new();
    for article in v["data"].as_array().unwrap() {
        for p in article["paragraphs"].as_array().unwrap() {
            for qa in p["qas"].as_array().unwrap() {
                out.push(qa["question"].as_str().unwrap().to_string());
            }
        }
    }
    out
}

/// n-gram counts as an association list, built by linear search.
pub fn ngram_counts<T: PartialEq + Clone>(tokens: &[T], n: usize) -> Vec<(Vec<T>, usize)> {
    let mut out: Vec<(Vec<T>, usize)> = Vec::new();
    if n == 0 || tokens.len() < n {
        return out;
    }
    for i in 0..=tokens.len() - n {
        let gram = tokens[i..i + n].to_vec();
        match out.iter_mut().find(|(g, _)| *g == gram) {
            Some((_, c)) => *c += 1,
            None => out.push((gram, 1)),
        }
    }
    out
}

/// Clipped n-gram matches and total candidate n-grams for one pair.
pub fn clipped_matches<T: PartialEq + Clone>(candidate: &[T], reference: &[T], n: usize) -> (usize, usize) {
    let cand = ngram_counts(candidate, n);
    let refs = ngram_counts(reference, n);
    let mut matched = 0;
    let mut total = 0;
    for (gram, c) in &cand {
        total += c;
        let r = refs.iter().find(|(g, _)| g == gram).map_or(0, |(_, c)| *c);
        matched += (*c).min(r);
    }
    (matched, total)
}

fn is_subsequence<T: PartialEq>(needle: &[&T], hay: &[T]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|x| it.any(|h| h == *x))
}

/// Longest common subsequence length by enumerating every subsequence of the
/// shorter input. Exponential; keep inputs short.
pub fn lcs_brute<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (short, long) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    assert!(short.len() <= 16, "brute-force LCS input too long");
    let mut best = 0;
    for mask in 0u32..(1u32 << short.len()) {
        let len = mask.count_ones() as usize;
        if len <= best {
            continue;
        }
        let sub: Vec<&T> = (0..short.len()).filter(|i| mask & (1 << i) != 0).map(|i| &short[i]).collect();
        if is_subsequence(&sub, long) {
            best = len;
        }
    }
    best
}

/// ROUGE-L F-measure from its definition, 0–1.
pub fn rouge_l_closed_form(lcs: usize, pred_len: usize, ref_len: usize, beta: f64) -> f64 {
    if lcs == 0 || pred_len == 0 || ref_len == 0 {
        return 0.0;
    }
    let p = lcs as f64 / pred_len as f64;
    let r = lcs as f64 / ref_len as f64;
    (1.0 + beta * beta) * p * r / (r + beta * beta * p)
}

/// METEOR from its definition, 0–1.
pub fn meteor_closed_form(matches: usize, chunks: usize, pred_len: usize, ref_len: usize) -> f64 {
    if matches == 0 {
        return 0.0;
    }
    let (alpha, beta, gamma) = (0.9, 3.0, 0.5);
    let p = matches as f64 / pred_len as f64;
    let r = matches as f64 / ref_len as f64;
    let fmean = p * r / (alpha * p + (1.0 - alpha) * r);
    let penalty = gamma * (chunks as f64 / matches as f64).powf(beta);
    fmean * (1.0 - penalty)
}

/// A random token sequence over a small alphabet, so that matches are common.
pub fn random_tokens<R: Rng>(rng: &mut R, max_len: usize) -> Vec<String> {
    let len = rng.random_range(0..=max_len);
    (0..len).map(|_| format!("w{}", rng.random_range(0..5u8))).collect()
}

/// A random probability vector over tokens `t0..tk`.
pub fn random_probabilities<R: Rng>(rng: &mut R, max_tokens: usize) -> Vec<(String, f64)> {
    let k = rng.random_range(1..=max_tokens);
    let raw: Vec<f64> = (0..k)
        .map(|_| {
            // Occasional exact ties exercise the tie-break.
            if rng.random_bool(0.2) { 0.25 } else { rng.random_range(0.001..1.0) }
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().enumerate().map(|(i, w)| (format!("t{i}"), w / total)).collect()
}
