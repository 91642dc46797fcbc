//! Machine translation of original English descriptors into the corpus
//! languages, backed by a JSONL cache so that reruns never touch the network.

use std::collections::BTreeMap;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{normalize_surface, Descriptor, Lexicon, LexiconError, Preference, Provenance};
use crate::types::Language;

#[derive(Debug, thiserror::Error)]
pub enum TranslateError {
    #[error("no translation provider configured and cache has no entry for {source_text:?} -> {target}")]
    Unavailable { source_text: String, target: Language },
    #[error("provider returned an empty translation for {source_text:?} -> {target}")]
    Empty { source_text: String, target: Language },
    #[error("translation provider failed: {0}")]
    Provider(String),
    #[error("{path}:{line}: malformed cache entry: {message}")]
    Cache { path: String, line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
}

pub trait TranslationProvider {
    fn translate(&self, text: &str, target: Language) -> Result<String, TranslateError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub source: String,
    pub target_lang: Language,
    pub translation: String,
}

/// Append-only translation cache. Single writer.
#[derive(Debug)]
pub struct TranslationCache {
    path: PathBuf,
    entries: BTreeMap<(String, Language), String>,
}

impl TranslationCache {
    /// Opens the cache at `path`, loading existing entries. A missing file is an empty cache.
    pub fn open(path: impl Into<PathBuf>) -> Result<Self, TranslateError> {
        let path = path.into();
        let mut entries = BTreeMap::new();
        match std::fs::read_to_string(&path) {
            Ok(text) => {
                for (i, line) in text.lines().enumerate() {
                    if line.trim().is_empty() {
                        continue;
                    }
                    let e: CacheEntry = serde_json::from_str(line).map_err(|e| TranslateError::Cache {
                        path: path.display().to_string(),
                        line: i + 1,
                        message: e.to_string(),
                    })?;
                    // later lines win, matching append order
                    entries.insert((e.source, e.target_lang), e.translation);
                }
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {}
            Err(source) => return Err(TranslateError::Io { path: path.display().to_string(), source }),
        }
        Ok(TranslationCache { path, entries })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, source: &str, target: Language) -> Option<&str> {
        self.entries.get(&(source.to_string(), target)).map(String::as_str)
    }

    pub fn record(&mut self, source: &str, target: Language, translation: &str) -> Result<(), TranslateError> {
        let entry = CacheEntry { source: source.into(), target_lang: target, translation: translation.into() };
        let line = serde_json::to_string(&entry).expect("cache entry serializes");
        let io = |source| TranslateError::Io { path: self.path.display().to_string(), source };
        let mut f = OpenOptions::new().create(true).append(true).open(&self.path).map_err(io)?;
        writeln!(f, "{line}").map_err(io)?;
        self.entries.insert((entry.source, target), entry.translation);
        Ok(())
    }
}

/// Translated (surface, language) pairs that already existed under another
/// descriptor and were therefore not added.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Collision {
    pub base_id: String,
    pub surface: String,
    pub language: Language,
    pub existing_id: String,
}

#[derive(Debug, Clone)]
pub struct TranslationOutcome {
    pub lexicon: Lexicon,
    pub added: usize,
    pub provider_calls: usize,
    pub collisions: Vec<Collision>,
}

pub fn translated_id(base_id: &str, target: Language) -> String {
    format!("{base_id}:{target}")
}

/// Adds one translated entry per (original dispreferred descriptor, target language).
///
/// The cache is consulted first; every provider response is appended to it
/// before use. Entries already present from an earlier run are left as-is.
pub fn translate_lexicon(
    lexicon: &Lexicon,
    targets: &[Language],
    provider: Option<&dyn TranslationProvider>,
    cache: &mut TranslationCache,
) -> Result<TranslationOutcome, TranslateError> {
    let mut targets: Vec<Language> = targets.iter().copied().filter(|&l| l != Language::En).collect();
    targets.sort();
    targets.dedup();

    let sources: Vec<&Descriptor> = lexicon
        .descriptors()
        .iter()
        .filter(|d| d.provenance == Provenance::Original && d.preference == Preference::Dispreferred)
        .collect();

    let mut extra: Vec<Descriptor> = Vec::new();
    let mut collisions = Vec::new();
    let mut provider_calls = 0;
    for d in sources {
        for &target in &targets {
            let raw = match cache.get(&d.surface, target) {
                Some(t) => t.to_string(),
                None => {
                    let p = provider.ok_or_else(|| TranslateError::Unavailable { source_text: d.surface.clone(), target })?;
                    provider_calls += 1;
                    let t = p.translate(&d.surface, target)?;
                    if t.trim().is_empty() {
                        return Err(TranslateError::Empty { source_text: d.surface.clone(), target });
                    }
                    cache.record(&d.surface, target, &t)?;
                    t
                }
            };
            let surface = normalize_surface(&raw);
            if surface.is_empty() {
                return Err(TranslateError::Empty { source_text: d.surface.clone(), target });
            }
            let id = translated_id(&d.id, target);
            if let Some(existing) = lexicon.get(&id) {
                if existing.surface == surface && existing.language == target {
                    continue;
                }
            }
            let owner = lexicon
                .find(&surface, target)
                .map(|e| e.id.clone())
                .or_else(|| extra.iter().find(|e| e.surface == surface && e.language == target).map(|e| e.id.clone()));
            if let Some(existing_id) = owner {
                collisions.push(Collision { base_id: d.id.clone(), surface, language: target, existing_id });
                continue;
            }
            extra.push(Descriptor {
                id,
                surface,
                language: target,
                axis: d.axis.clone(),
                preference: d.preference,
                provenance: Provenance::Translated,
                base_id: Some(d.id.clone()),
            });
        }
    }
    let added = extra.len();
    let lexicon = if extra.is_empty() { lexicon.clone() } else { lexicon.with_added(extra)? };
    Ok(TranslationOutcome { lexicon, added, provider_calls, collisions })
}
