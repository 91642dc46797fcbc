//! Documents, analysis units and the fixed-word-count chunker.

mod counter;
mod sentences;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use counter::{count_tokens, load_external_counts, word_count, CounterMode, Ratio, TokenCounter, TokenCounterConfig};
pub use sentences::{abbreviations, split_sentences};

use crate::io::{read_jsonl, IoError};
use crate::types::{Label, Language, Split, UnitKind};

#[derive(Debug, thiserror::Error)]
pub enum PreprocessError {
    #[error("no external token count for {key:?}")]
    ExternalMiss { key: String },
    #[error("invalid token counter configuration: {0}")]
    Config(String),
    #[error("document {id:?}: {message}")]
    InvalidDocument { id: String, message: String },
    #[error(transparent)]
    Io(#[from] IoError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub label: Label,
    pub language: Language,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnalysisUnit {
    pub unit_id: String,
    pub doc_id: String,
    pub index: usize,
    pub kind: UnitKind,
    pub text: String,
    pub label: Label,
    pub token_count: usize,
    pub word_count: usize,
}

pub fn unit_id(doc_id: &str, index: usize) -> String {
    format!("{doc_id}#{index}")
}

/// Document id of a `doc_id#index` unit id.
pub fn doc_id_of(unit_id: &str) -> &str {
    unit_id.rsplit_once('#').map_or(unit_id, |(d, _)| d)
}

/// Loads a corpus JSONL file, rejecting empty texts and duplicate ids.
pub fn load_corpus(path: &Path) -> Result<Vec<Document>, PreprocessError> {
    let docs: Vec<Document> = read_jsonl(path)?;
    let mut seen = std::collections::HashSet::new();
    for d in &docs {
        if d.text.trim().is_empty() {
            return Err(PreprocessError::InvalidDocument { id: d.id.clone(), message: "empty text".into() });
        }
        if !seen.insert(d.id.as_str()) {
            return Err(PreprocessError::InvalidDocument { id: d.id.clone(), message: "duplicate id".into() });
        }
    }
    Ok(docs)
}

/// Splits a document whose token count exceeds the whole-unit threshold into
/// consecutive, non-overlapping chunks of `chunk_word_limit` words.
pub fn chunk_document(doc: &Document, counter: &TokenCounter) -> Result<Vec<AnalysisUnit>, PreprocessError> {
    let cfg = counter.config();
    let whole_id = unit_id(&doc.id, 0);
    let doc_tokens = counter.count(&[&doc.id, &whole_id], &doc.text)?;
    if doc_tokens <= cfg.whole_threshold() {
        return Ok(vec![AnalysisUnit {
            unit_id: whole_id,
            doc_id: doc.id.clone(),
            index: 0,
            kind: UnitKind::Whole,
            text: doc.text.clone(),
            label: doc.label,
            token_count: doc_tokens,
            word_count: word_count(&doc.text),
        }]);
    }
    let words: Vec<&str> = doc.text.split_whitespace().collect();
    words
        .chunks(cfg.chunk_word_limit)
        .enumerate()
        .map(|(index, chunk)| {
            let text = chunk.join(" ");
            let id = unit_id(&doc.id, index);
            Ok(AnalysisUnit {
                token_count: counter.count(&[&id], &text)?,
                unit_id: id,
                doc_id: doc.id.clone(),
                index,
                kind: UnitKind::Chunk,
                word_count: chunk.len(),
                text,
                label: doc.label,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ChunkStats {
    pub documents: usize,
    pub whole_units: usize,
    pub chunks: usize,
    /// Chunks whose token count still exceeds the whole-unit threshold.
    pub overflowing_chunks: usize,
}

/// Chunks every document, optionally in parallel. Units are returned sorted
/// by (doc_id, index) so output is identical either way.
pub fn chunk_corpus(
    docs: &[Document],
    counter: &TokenCounter,
    parallel: bool,
) -> Result<(Vec<AnalysisUnit>, ChunkStats), PreprocessError> {
    let per_doc: Vec<Vec<AnalysisUnit>> = if parallel {
        docs.par_iter().map(|d| chunk_document(d, counter)).collect::<Result<_, _>>()?
    } else {
        docs.iter().map(|d| chunk_document(d, counter)).collect::<Result<_, _>>()?
    };
    let mut units: Vec<AnalysisUnit> = per_doc.into_iter().flatten().collect();
    sort_units(&mut units);
    let threshold = counter.config().whole_threshold();
    let stats = ChunkStats {
        documents: docs.len(),
        whole_units: units.iter().filter(|u| u.kind == UnitKind::Whole).count(),
        chunks: units.iter().filter(|u| u.kind == UnitKind::Chunk).count(),
        overflowing_chunks: units.iter().filter(|u| u.kind == UnitKind::Chunk && u.token_count > threshold).count(),
    };
    Ok((units, stats))
}

pub fn sort_units(units: &mut [AnalysisUnit]) {
    units.sort_by(|a, b| a.doc_id.cmp(&b.doc_id).then(a.index.cmp(&b.index)));
}
