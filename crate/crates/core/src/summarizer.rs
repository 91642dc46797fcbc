//! Budget-constrained extractive summarization.
//!
//! Sentences are embedded as TF·IDF vectors, linked when their cosine
//! similarity exceeds a threshold, and ranked by the stationary distribution of
//! a damped random walk over that graph (thresholded LexRank). Selection takes
//! sentences in rank order up to `max_sentences`, then drops the most recently
//! added sentence until the summary fits the token budget.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

use crate::preprocess::{split_sentences, unit_id, word_count, AnalysisUnit, Document, PreprocessError, TokenCounter};
use crate::types::{Language, UnitKind};

#[derive(Debug, thiserror::Error)]
pub enum SummarizerError {
    #[error("similarity matrix contains a non-finite weight at ({0}, {1})")]
    NonFinite(usize, usize),
    #[error("similarity matrix is malformed: {0}")]
    Malformed(String),
    #[error("invalid summarizer configuration: {0}")]
    Config(String),
    #[error("summaries need a counter that can count arbitrary text; external counts cannot")]
    CounterUnsupported,
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
}

pub type TermVector = BTreeMap<String, f64>;

/// Per-sentence TF·IDF vectors over lowercased word tokens, with
/// `idf = ln(n / (1 + df)) + 1` computed over `sentences` alone.
pub fn sentence_vectors<S: AsRef<str>>(sentences: &[S]) -> Vec<TermVector> {
    let n = sentences.len() as f64;
    let tfs: Vec<HashMap<String, f64>> = sentences
        .iter()
        .map(|s| {
            let mut tf = HashMap::new();
            for w in s.as_ref().unicode_words() {
                *tf.entry(w.to_lowercase()).or_insert(0.0) += 1.0;
            }
            tf
        })
        .collect();
    let mut df: HashMap<&str, f64> = HashMap::new();
    for tf in &tfs {
        for term in tf.keys() {
            *df.entry(term.as_str()).or_insert(0.0) += 1.0;
        }
    }
    tfs.iter()
        .map(|tf| tf.iter().map(|(t, &c)| (t.clone(), c * ((n / (1.0 + df[t.as_str()])).ln() + 1.0))).collect())
        .collect()
}

pub fn cosine(a: &TermVector, b: &TermVector) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let dot: f64 = small.iter().filter_map(|(t, x)| large.get(t).map(|y| x * y)).sum();
    let na = a.values().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.values().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na * nb)).clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    n: usize,
    weights: Vec<f64>,
    threshold: f64,
}

pub const DEFAULT_THRESHOLD: f64 = 0.1;

impl SimilarityGraph {
    /// Wraps a symmetric similarity matrix with entries in `[0, 1]`.
    pub fn new(weights: Vec<Vec<f64>>, threshold: f64) -> Result<Self, SummarizerError> {
        let n = weights.len();
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in weights.iter().enumerate() {
            if row.len() != n {
                return Err(SummarizerError::Malformed(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            for (j, &w) in row.iter().enumerate() {
                if !w.is_finite() {
                    return Err(SummarizerError::NonFinite(i, j));
                }
                if !(0.0..=1.0).contains(&w) {
                    return Err(SummarizerError::Malformed(format!("weight {w} at ({i}, {j}) outside [0, 1]")));
                }
            }
            flat.extend_from_slice(row);
        }
        for i in 0..n {
            for j in 0..i {
                if (flat[i * n + j] - flat[j * n + i]).abs() > 1e-12 {
                    return Err(SummarizerError::Malformed(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(SimilarityGraph { n, weights: flat, threshold })
    }

    pub fn from_vectors(vectors: &[TermVector], threshold: f64) -> Self {
        let n = vectors.len();
        let mut weights = vec![0.0; n * n];
        for i in 0..n {
            weights[i * n + i] = 1.0;
            for j in 0..i {
                let c = cosine(&vectors[i], &vectors[j]);
                weights[i * n + j] = c;
                weights[j * n + i] = c;
            }
        }
        SimilarityGraph { n, weights, threshold }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.n + j]
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Off-diagonal entries strictly above the threshold become edges.
    pub fn adjacency(&self) -> Vec<Vec<bool>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| i != j && self.weight(i, j) > self.threshold).collect())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CentralityConfig {
    pub damping: f64,
    pub epsilon: f64,
    pub max_iterations: usize,
}

impl Default for CentralityConfig {
    fn default() -> Self {
        CentralityConfig { damping: 0.85, epsilon: 1e-4, max_iterations: 200 }
    }
}

impl CentralityConfig {
    pub fn validate(&self) -> Result<(), SummarizerError> {
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(SummarizerError::Config(format!("damping {} not in (0, 1]", self.damping)));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 || self.max_iterations == 0 {
            return Err(SummarizerError::Config("epsilon and max_iterations must be positive".into()));
        }
        Ok(())
    }
}

/// Row-stochastic transition matrix of the binarized graph; sentences with no
/// edges jump uniformly.
fn transition_rows(graph: &SimilarityGraph) -> Vec<Vec<f64>> {
    let n = graph.len();
    graph
        .adjacency()
        .into_iter()
        .map(|row| {
            let degree = row.iter().filter(|&&e| e).count();
            if degree == 0 {
                vec![1.0 / n as f64; n]
            } else {
                row.iter().map(|&e| if e { 1.0 / degree as f64 } else { 0.0 }).collect()
            }
        })
        .collect()
}

/// LexRank centrality: damped power iteration to the stationary distribution.
pub fn lexrank_scores(graph: &SimilarityGraph, config: &CentralityConfig) -> Result<Vec<f64>, SummarizerError> {
    config.validate()?;
    let n = graph.len();
    if n == 0 {
        return Err(SummarizerError::Malformed("graph has no sentences".into()));
    }
    if let Some(pos) = graph.weights.iter().position(|w| !w.is_finite()) {
        return Err(SummarizerError::NonFinite(pos / n, pos % n));
    }
    let rows = transition_rows(graph);
    let teleport = (1.0 - config.damping) / n as f64;
    let mut p = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..config.max_iterations {
        next.iter_mut().for_each(|x| *x = teleport);
        for (i, row) in rows.iter().enumerate() {
            let mass = config.damping * p[i];
            for (x, &m) in next.iter_mut().zip(row) {
                *x += mass * m;
            }
        }
        let delta: f64 = p.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut p, &mut next);
        if delta < config.epsilon {
            break;
        }
    }
    let total: f64 = p.iter().sum();
    Ok(p.into_iter().map(|x| x / total).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SummaryConfig {
    pub min_sentences: usize,
    pub max_sentences: usize,
    pub budget_tokens: usize,
}

impl Default for SummaryConfig {
    fn default() -> Self {
        SummaryConfig { min_sentences: 3, max_sentences: 26, budget_tokens: 512 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SummarizerConfig {
    #[serde(flatten)]
    pub summary: SummaryConfig,
    pub similarity_threshold: f64,
    pub centrality: CentralityConfig,
}

impl Default for SummarizerConfig {
    fn default() -> Self {
        SummarizerConfig {
            summary: SummaryConfig::default(),
            similarity_threshold: DEFAULT_THRESHOLD,
            centrality: CentralityConfig::default(),
        }
    }
}

impl SummarizerConfig {
    pub fn validate(&self) -> Result<(), SummarizerError> {
        let s = &self.summary;
        if s.min_sentences == 0 || s.min_sentences > s.max_sentences {
            return Err(SummarizerError::Config("need 1 <= min_sentences <= max_sentences".into()));
        }
        if s.budget_tokens == 0 {
            return Err(SummarizerError::Config("budget_tokens must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.similarity_threshold) {
            return Err(SummarizerError::Config("similarity_threshold must lie in [0, 1]".into()));
        }
        self.centrality.validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    /// Indices of kept sentences, in document order.
    pub selected: Vec<usize>,
    /// Kept sentences in document order.
    pub sentences: Vec<String>,
    pub text: String,
    pub token_count: usize,
    pub available: usize,
    /// A single remaining sentence still exceeds the budget.
    pub overflowing: bool,
    pub empty: bool,
    pub scores: Vec<f64>,
}

/// Sentence indices ordered by descending score, earlier sentence first on ties.
pub fn rank_order(scores: &[f64]) -> Vec<usize> {
    // quantize so that scores equal up to rounding noise tie exactly
    let key = |s: f64| (s * 1e12).round() as i64;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| key(scores[b]).cmp(&key(scores[a])).then(a.cmp(&b)));
    order
}

pub fn summarize_budget(
    text: &str,
    language: Language,
    counter: &TokenCounter,
    config: &SummarizerConfig,
) -> Result<Summary, SummarizerError> {
    config.validate()?;
    if !counter.counts_free_text() {
        return Err(SummarizerError::CounterUnsupported);
    }
    let sentences = split_sentences(text, language);
    if sentences.is_empty() {
        return Ok(Summary {
            selected: vec![],
            sentences: vec![],
            text: String::new(),
            token_count: 0,
            available: 0,
            overflowing: false,
            empty: true,
            scores: vec![],
        });
    }
    let graph = SimilarityGraph::from_vectors(&sentence_vectors(&sentences), config.similarity_threshold);
    let scores = lexrank_scores(&graph, &config.centrality)?;

    let take = config.summary.max_sentences.min(sentences.len());
    let mut chosen: Vec<usize> = rank_order(&scores).into_iter().take(take).collect();
    let render = |chosen: &[usize]| {
        let mut idx = chosen.to_vec();
        idx.sort_unstable();
        let text = idx.iter().map(|&i| sentences[i]).collect::<Vec<_>>().join(" ");
        (idx, text)
    };
    let (mut selected, mut summary_text) = render(&chosen);
    let mut tokens = counter.count(&[], &summary_text)?;
    while tokens > config.summary.budget_tokens && chosen.len() > 1 {
        chosen.pop();
        (selected, summary_text) = render(&chosen);
        tokens = counter.count(&[], &summary_text)?;
    }
    Ok(Summary {
        sentences: selected.iter().map(|&i| sentences[i].to_string()).collect(),
        selected,
        text: summary_text,
        token_count: tokens,
        available: sentences.len(),
        overflowing: tokens > config.summary.budget_tokens,
        empty: false,
        scores,
    })
}

pub fn summarize_document(
    doc: &Document,
    counter: &TokenCounter,
    config: &SummarizerConfig,
) -> Result<(AnalysisUnit, Summary), SummarizerError> {
    let summary = summarize_budget(&doc.text, doc.language, counter, config)?;
    let unit = AnalysisUnit {
        unit_id: unit_id(&doc.id, 0),
        doc_id: doc.id.clone(),
        index: 0,
        kind: UnitKind::Summary,
        text: summary.text.clone(),
        label: doc.label,
        token_count: summary.token_count,
        word_count: word_count(&summary.text),
    };
    Ok((unit, summary))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::{CounterMode, TokenCounterConfig};

    fn counter() -> TokenCounter {
        TokenCounter::new(TokenCounterConfig::default()).unwrap()
    }

    #[test]
    fn identical_sentences_identical_vectors() {
        let v = sentence_vectors(&["Das Opfer klagt.", "Das Opfer klagt."]);
        assert_eq!(v[0], v[1]);
        assert!((cosine(&v[0], &v[1]) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_vocabularies_are_orthogonal() {
        let v = sentence_vectors(&["alpha beta", "gamma delta"]);
        assert_eq!(cosine(&v[0], &v[1]), 0.0);
    }

    #[test]
    fn single_sentence_idf() {
        let v = sentence_vectors(&["a b a"]);
        let idf = (0.5f64).ln() + 1.0;
        assert!((v[0]["a"] - 2.0 * idf).abs() < 1e-15);
        assert!((v[0]["b"] - idf).abs() < 1e-15);
    }

    #[test]
    fn uniform_scores_for_symmetric_graph() {
        let g = SimilarityGraph::new(vec![vec![1.0; 3]; 3], 0.1).unwrap();
        let s = lexrank_scores(&g, &CentralityConfig::default()).unwrap();
        assert_eq!(s[0], s[1]);
        assert_eq!(s[1], s[2]);
        assert!((s[0] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(rank_order(&s), vec![0, 1, 2]);
    }

    #[test]
    fn single_node() {
        let g = SimilarityGraph::new(vec![vec![1.0]], 0.1).unwrap();
        assert_eq!(lexrank_scores(&g, &CentralityConfig::default()).unwrap(), vec![1.0]);
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(matches!(SimilarityGraph::new(vec![vec![1.0, f64::NAN], vec![f64::NAN, 1.0]], 0.1), Err(SummarizerError::NonFinite(0, 1))));
        assert!(SimilarityGraph::new(vec![vec![1.0, 0.2], vec![0.3, 1.0]], 0.1).is_err());
        assert!(SimilarityGraph::new(vec![vec![1.0, 1.5], vec![1.5, 1.0]], 0.1).is_err());
    }

    #[test]
    fn hub_sentence_ranks_first() {
        // node 0 is linked to everyone, the others only to node 0
        let w = vec![
            vec![1.0, 0.5, 0.5, 0.5],
            vec![0.5, 1.0, 0.0, 0.0],
            vec![0.5, 0.0, 1.0, 0.0],
            vec![0.5, 0.0, 0.0, 1.0],
        ];
        let s = lexrank_scores(&SimilarityGraph::new(w, 0.1).unwrap(), &CentralityConfig::default()).unwrap();
        assert_eq!(rank_order(&s)[0], 0);
        assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    fn sentence(i: usize, words: usize) -> String {
        // distinct vocabulary per sentence so every sentence is isolated and scores tie
        let mut s: Vec<String> = (0..words).map(|j| format!("s{i}w{j}")).collect();
        s[0] = format!("S{i}w0");
        format!("{}.", s.join(" "))
    }

    #[test]
    fn under_budget_keeps_everything() {
        let text: Vec<String> = (0..4).map(|i| sentence(i, 100)).collect();
        let s = summarize_budget(&text.join(" "), Language::De, &counter(), &SummarizerConfig::default()).unwrap();
        assert_eq!(s.selected, vec![0, 1, 2, 3]);
        assert_eq!(s.token_count, 400);
        assert!(!s.overflowing);
    }

    #[test]
    fn trimming_drops_lowest_ranked() {
        let text: Vec<String> = (0..10).map(|i| sentence(i, 100)).collect();
        let s = summarize_budget(&text.join(" "), Language::De, &counter(), &SummarizerConfig::default()).unwrap();
        // all scores tie, so rank order is document order and the tail is trimmed
        assert_eq!(s.selected, vec![0, 1, 2, 3, 4]);
        assert_eq!(s.token_count, 500);
    }

    #[test]
    fn fewer_sentences_than_minimum() {
        let text = format!("{} {}", sentence(0, 5), sentence(1, 5));
        let s = summarize_budget(&text, Language::De, &counter(), &SummarizerConfig::default()).unwrap();
        assert_eq!(s.selected, vec![0, 1]);
        assert_eq!(s.available, 2);
    }

    #[test]
    fn single_long_sentence_overflows() {
        let s = summarize_budget(&sentence(0, 600), Language::De, &counter(), &SummarizerConfig::default()).unwrap();
        assert_eq!(s.selected, vec![0]);
        assert!(s.overflowing);
        assert_eq!(s.token_count, 600);
    }

    #[test]
    fn empty_text_is_flagged() {
        let s = summarize_budget("  ", Language::Fr, &counter(), &SummarizerConfig::default()).unwrap();
        assert!(s.empty);
        assert!(s.text.is_empty());
    }

    #[test]
    fn max_sentences_caps_selection() {
        let text: Vec<String> = (0..40).map(|i| sentence(i, 3)).collect();
        let s = summarize_budget(&text.join(" "), Language::De, &counter(), &SummarizerConfig::default()).unwrap();
        assert_eq!(s.selected.len(), 26);
    }

    #[test]
    fn external_counter_is_rejected() {
        let cfg = TokenCounterConfig { mode: CounterMode::ExternalCounts, ..Default::default() };
        let c = TokenCounter::with_table(cfg, Default::default());
        assert!(matches!(
            summarize_budget("A. B.", Language::De, &c, &SummarizerConfig::default()),
            Err(SummarizerError::CounterUnsupported)
        ));
    }
}
