#![allow(clippy::needless_range_loop)]

mod common;

use biasaudit::preprocess::{load_corpus, split_sentences, TokenCounter, TokenCounterConfig};
use biasaudit::summarizer::{
    lexrank_scores, rank_order, summarize_budget, summarize_document, CentralityConfig, SimilarityGraph,
    SummarizerConfig,
};
use common::{exact_lexrank, fixture, Lcg};

fn random_graph(rng: &mut Lcg, n: usize) -> Vec<Vec<f64>> {
    let mut w = vec![vec![0.0; n]; n];
    for i in 0..n {
        w[i][i] = 1.0;
        for j in 0..i {
            // mix of sub-threshold, exact-threshold and strong weights
            let v = match rng.below(4) {
                0 => 0.05,
                1 => 0.1,
                _ => 0.1 + rng.below(900) as f64 / 1000.0,
            };
            w[i][j] = v;
            w[j][i] = v;
        }
    }
    w
}

fn tight() -> CentralityConfig {
    CentralityConfig { epsilon: 1e-14, max_iterations: 100_000, ..CentralityConfig::default() }
}

#[test]
fn fixed_point_matches_linear_solve() {
    let mut rng = Lcg(11);
    for trial in 0..3000 {
        let n = 1 + trial % 6;
        let g = SimilarityGraph::new(random_graph(&mut rng, n), 0.1).unwrap();
        let want = exact_lexrank(&g.adjacency(), 0.85);
        let got = lexrank_scores(&g, &tight()).unwrap();
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-6, "n={n}: {got:?} vs {want:?}");
        }
    }
}

#[test]
fn default_tolerance_error_is_bounded() {
    let cfg = CentralityConfig::default();
    let bound = cfg.epsilon * cfg.damping / (1.0 - cfg.damping);
    let mut rng = Lcg(12);
    let mut worst = 0.0f64;
    for trial in 0..3000 {
        let n = 1 + trial % 6;
        let g = SimilarityGraph::new(random_graph(&mut rng, n), 0.1).unwrap();
        let want = exact_lexrank(&g.adjacency(), 0.85);
        let got = lexrank_scores(&g, &cfg).unwrap();
        let l1: f64 = got.iter().zip(&want).map(|(a, b)| (a - b).abs()).sum();
        worst = worst.max(l1);
        assert!(l1 <= bound, "n={n}: L1 error {l1:e} > {bound:e}");
    }
    eprintln!("worst L1 error at default epsilon {worst:e}");
}

#[test]
fn scores_sum_to_one_and_permute_with_the_graph() {
    let mut rng = Lcg(13);
    for trial in 0..500 {
        let n = 2 + trial % 7;
        let w = random_graph(&mut rng, n);
        let s = lexrank_scores(&SimilarityGraph::new(w.clone(), 0.1).unwrap(), &CentralityConfig::default()).unwrap();
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(s.iter().all(|&x| x > 0.0));

        // reverse the node order
        let perm: Vec<usize> = (0..n).rev().collect();
        let pw: Vec<Vec<f64>> = perm.iter().map(|&i| perm.iter().map(|&j| w[i][j]).collect()).collect();
        let ps = lexrank_scores(&SimilarityGraph::new(pw, 0.1).unwrap(), &CentralityConfig::default()).unwrap();
        for (k, &i) in perm.iter().enumerate() {
            assert!((ps[k] - s[i]).abs() < 1e-12);
        }
    }
}

#[test]
fn edge_needs_strictly_more_than_threshold() {
    let g = SimilarityGraph::new(vec![vec![1.0, 0.1], vec![0.1, 1.0]], 0.1).unwrap();
    assert_eq!(g.adjacency(), vec![vec![false, false], vec![false, false]]);
    let g = SimilarityGraph::new(vec![vec![1.0, 0.1000001], vec![0.1000001, 1.0]], 0.1).unwrap();
    assert_eq!(g.adjacency(), vec![vec![false, true], vec![true, false]]);
}

#[test]
fn symmetric_graph_gives_uniform_scores_and_document_order() {
    for n in 1..10 {
        let w = vec![vec![0.5; n]; n];
        let s = lexrank_scores(&SimilarityGraph::new(w, 0.1).unwrap(), &CentralityConfig::default()).unwrap();
        for x in &s {
            assert!((x - 1.0 / n as f64).abs() < 1e-12);
        }
        assert_eq!(rank_order(&s), (0..n).collect::<Vec<_>>());
    }
}

#[test]
fn fixture_summaries_fit_the_budget_and_keep_order() {
    let counter = TokenCounter::new(TokenCounterConfig::default()).unwrap();
    let cfg = SummarizerConfig::default();
    for doc in load_corpus(&fixture("corpus.jsonl")).unwrap() {
        let (unit, s) = summarize_document(&doc, &counter, &cfg).unwrap();
        assert!(unit.token_count <= 512 || s.overflowing, "{}", doc.id);
        assert!(!s.overflowing, "{} overflows", doc.id);
        assert!(s.selected.windows(2).all(|w| w[0] < w[1]));
        assert!(s.selected.len() <= cfg.summary.max_sentences);
        let all = split_sentences(&doc.text, doc.language);
        assert_eq!(s.available, all.len());
        for (&i, kept) in s.selected.iter().zip(&s.sentences) {
            assert_eq!(all[i], kept);
        }
        // the kept set is a prefix of the score ranking
        let mut top: Vec<usize> = rank_order(&s.scores).into_iter().take(s.selected.len()).collect();
        top.sort_unstable();
        assert_eq!(top, s.selected);
    }
}

#[test]
fn synthetic_summaries_respect_budget() {
    let counter = TokenCounter::new(TokenCounterConfig::default()).unwrap();
    let cfg = SummarizerConfig::default();
    for doc in common::synthetic_corpus(60, 5) {
        let s = summarize_budget(&doc.text, doc.language, &counter, &cfg).unwrap();
        assert!(s.token_count <= 512);
        assert!(!s.empty);
    }
}
