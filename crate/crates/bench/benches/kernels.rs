use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qgkit::dataset::{build_examples, DelimiterScheme, FormatConfig, QplMode};
use qgkit::decode::{apply_temperature, nucleus_filter, sample_token, SamplerRng, TokenDistribution};
use qgkit::metrics::{lcs_length, score_corpus, tokenize_eval};
use qgkit_bench::{corpus, dataset, rng, sentence, zipf_probabilities};

fn lcs(c: &mut Criterion) {
    let mut group = c.benchmark_group("lcs_length");
    let mut r = rng(1);
    for len in [16, 64, 256] {
        let a = sentence(&mut r, len);
        let b = sentence(&mut r, len);
        group.bench_with_input(BenchmarkId::from_parameter(len), &(a, b), |bench, (a, b)| {
            bench.iter(|| lcs_length(black_box(a), black_box(b)))
        });
    }
    group.finish();
}

fn metrics(c: &mut Criterion) {
    let (preds, refs) = corpus(2, 1000);
    let p: Vec<&str> = preds.iter().map(String::as_str).collect();
    let r: Vec<&str> = refs.iter().map(String::as_str).collect();
    c.bench_function("score_corpus 1000 pairs", |b| b.iter(|| score_corpus(black_box(&p), black_box(&r)).unwrap()));
    c.bench_function("tokenize_eval", |b| b.iter(|| tokenize_eval(black_box(&preds[0]))));
}

fn sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("decode_step");
    for k in [100, 5000, 50_000] {
        let dist = TokenDistribution::probabilities(zipf_probabilities(k)).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(k), &dist, |b, dist| {
            let mut rng = SamplerRng::seeded(3);
            b.iter(|| {
                let scaled = apply_temperature(dist, 0.6).unwrap();
                let nucleus = nucleus_filter(&scaled, 0.9).unwrap();
                sample_token(&nucleus, &mut rng).unwrap()
            })
        });
    }
    group.finish();
}

fn formatting(c: &mut Criterion) {
    let ds = dataset(4, 500, 5);
    for qpl in [QplMode::Oqpl, QplMode::Aqpl] {
        let cfg = FormatConfig::new(qpl, DelimiterScheme::NaturalNumber, false).unwrap();
        c.bench_function(&format!("build_examples {qpl} 500x5"), |b| {
            b.iter(|| build_examples(black_box(&ds), &cfg).unwrap())
        });
    }
}

criterion_group!(benches, lcs, metrics, sampling, formatting);
criterion_main!(benches);
