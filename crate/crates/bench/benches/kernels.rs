use std::hint::black_box;

use biasaudit::bst::binomial_upper_tail;
use biasaudit::lexicon::{load_lexicon, DescriptorMatcher, MatchOptions};
use biasaudit::preprocess::split_sentences;
use biasaudit::summarizer::{lexrank_scores, sentence_vectors, CentralityConfig, SimilarityGraph, DEFAULT_THRESHOLD};
use biasaudit::Language;
use criterion::{criterion_group, criterion_main, Criterion};

const WORDS: &[&str] = &[
    "la", "cour", "rejette", "le", "recours", "du", "requérant", "contre", "décision", "frais", "victime", "menacé",
    "tribunal", "partie", "délai", "preuve", "témoin", "contrat", "jugement", "instance",
];

fn text(words: usize, seed: u64) -> String {
    let mut x = seed;
    let mut out = String::new();
    for i in 0..words {
        x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let w = WORDS[(x >> 33) as usize % WORDS.len()];
        if i % 12 == 0 {
            let mut c = w.chars();
            out.extend(c.next().unwrap().to_uppercase());
            out.push_str(c.as_str());
        } else {
            out.push_str(w);
        }
        out.push_str(if i % 12 == 11 { ". " } else { " " });
    }
    out
}

fn binomial(c: &mut Criterion) {
    c.bench_function("binomial_upper_tail n=3928", |b| b.iter(|| binomial_upper_tail(black_box(3928), black_box(3132), 0.762)));
    c.bench_function("binomial_upper_tail n=1e6", |b| b.iter(|| binomial_upper_tail(black_box(1_000_000), black_box(500_800), 0.5)));
}

fn matcher(c: &mut Criterion) {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/lexicon.tsv");
    let lex = load_lexicon(&path).unwrap();
    let m = DescriptorMatcher::for_language(&lex, Language::Fr, MatchOptions::default());
    let t = text(300, 1);
    c.bench_function("match 300-word unit", |b| b.iter(|| m.find("u#0", black_box(&t))));
}

fn lexrank(c: &mut Criterion) {
    let t = text(1500, 2);
    let sentences = split_sentences(&t, Language::Fr);
    let graph = SimilarityGraph::from_vectors(&sentence_vectors(&sentences), DEFAULT_THRESHOLD);
    let cfg = CentralityConfig::default();
    c.bench_function(&format!("lexrank {} sentences", sentences.len()), |b| b.iter(|| lexrank_scores(black_box(&graph), &cfg)));
}

criterion_group!(kernels, binomial, matcher, lexrank);
criterion_main!(kernels);
