//! Descriptor lexicon: the multilingual inventory of "dispreferred" social
//! descriptors, with provenance linking every translated or derived form back
//! to the English original it descends from.
//!
//! A [`Lexicon`] is immutable once built. Operations that extend it
//! ([`Lexicon::add_derived_forms`], [`translate::translate_lexicon`]) return a
//! new value and re-check every invariant.

mod matcher;
pub mod translate;

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_normalization::{is_nfc, UnicodeNormalization};

pub use matcher::{match_descriptors, DescriptorMatch, DescriptorMatcher, MatchOptions, OverlapPolicy};

use crate::types::{Language, UnknownLanguage};

pub const LEXICON_HEADER: [&str; 7] = ["id", "surface", "language", "axis", "preference", "provenance", "base_id"];
pub const DERIVATIONS_HEADER: [&str; 3] = ["base_id", "surface", "language"];

#[derive(Debug, thiserror::Error)]
pub enum LexiconError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate entry ({surface:?}, {language})")]
    Duplicate { line: usize, surface: String, language: Language },
    #[error("descriptor {id:?} refers to unknown base_id {base_id:?}")]
    DanglingBase { id: String, base_id: String },
    #[error("descriptor {id:?}: {message}")]
    Invalid { id: String, message: String },
    #[error("{} derivation(s) duplicate existing entries: {}", .0.len(), format_rejections(.0))]
    DuplicateDerivations(Vec<RejectedDerivation>),
    #[error(transparent)]
    Language(#[from] UnknownLanguage),
}

fn format_rejections(items: &[RejectedDerivation]) -> String {
    items
        .iter()
        .map(|r| format!("{}/{} (base {})", r.surface, r.language, r.base_id))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preference {
    Dispreferred,
    Reviewed,
    NoLabel,
}

impl Preference {
    pub fn name(self) -> &'static str {
        match self {
            Preference::Dispreferred => "dispreferred",
            Preference::Reviewed => "reviewed",
            Preference::NoLabel => "no_label",
        }
    }
}

impl FromStr for Preference {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dispreferred" => Ok(Preference::Dispreferred),
            "reviewed" => Ok(Preference::Reviewed),
            "no_label" | "" => Ok(Preference::NoLabel),
            _ => Err(format!("unknown preference {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Original,
    Translated,
    Derived,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::Original => "original",
            Provenance::Translated => "translated",
            Provenance::Derived => "derived",
        }
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "original" => Ok(Provenance::Original),
            "translated" => Ok(Provenance::Translated),
            "derived" => Ok(Provenance::Derived),
            _ => Err(format!("unknown provenance {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Descriptor {
    pub id: String,
    /// NFC-normalized surface form; may be a multi-word phrase.
    pub surface: String,
    pub language: Language,
    pub axis: String,
    pub preference: Preference,
    pub provenance: Provenance,
    /// Id of the English original this form descends from.
    pub base_id: Option<String>,
}

impl Descriptor {
    fn check_shape(&self) -> Result<(), LexiconError> {
        let invalid = |message: &str| LexiconError::Invalid { id: self.id.clone(), message: message.to_string() };
        if self.id.is_empty() {
            return Err(invalid("empty id"));
        }
        if self.surface.trim().is_empty() {
            return Err(invalid("empty surface"));
        }
        if !is_nfc(&self.surface) {
            return Err(invalid("surface is not NFC-normalized"));
        }
        match (self.provenance, &self.base_id) {
            (Provenance::Original, Some(_)) => Err(invalid("original descriptor must not carry a base_id")),
            (Provenance::Original, None) if self.language != Language::En => {
                Err(invalid("original descriptors must be English"))
            }
            (Provenance::Translated | Provenance::Derived, None) => {
                Err(invalid("translated and derived descriptors need a base_id"))
            }
            _ => Ok(()),
        }
    }
}

/// Inventory sizes of a loaded lexicon.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LexiconStats {
    pub total: usize,
    pub original: usize,
    pub original_dispreferred: usize,
    pub axes_dispreferred: usize,
    pub by_language: BTreeMap<Language, usize>,
    pub by_provenance: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Derivation {
    pub base_id: String,
    pub surface: String,
    pub language: Language,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RejectedDerivation {
    pub base_id: String,
    pub surface: String,
    pub language: Language,
    /// Id of the entry already holding this (surface, language) pair.
    pub existing_id: String,
}

#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    version: String,
    descriptors: Vec<Descriptor>,
    by_id: HashMap<String, usize>,
    by_surface: HashMap<(String, Language), usize>,
}

impl PartialEq for Lexicon {
    fn eq(&self, other: &Self) -> bool {
        self.version == other.version && self.descriptors == other.descriptors
    }
}

impl Lexicon {
    pub fn empty(version: impl Into<String>) -> Self {
        Lexicon { version: version.into(), ..Default::default() }
    }

    /// Builds a lexicon, normalizing surfaces to NFC and validating every invariant.
    pub fn new(version: impl Into<String>, descriptors: Vec<Descriptor>) -> Result<Self, LexiconError> {
        let mut lex = Lexicon::empty(version);
        for (i, mut d) in descriptors.into_iter().enumerate() {
            d.surface = normalize_surface(&d.surface);
            lex.push(d, i + 1)?;
        }
        lex.check_bases()?;
        Ok(lex)
    }

    fn push(&mut self, d: Descriptor, line: usize) -> Result<(), LexiconError> {
        d.check_shape()?;
        let key = (d.surface.clone(), d.language);
        if self.by_surface.contains_key(&key) {
            return Err(LexiconError::Duplicate { line, surface: d.surface, language: d.language });
        }
        if self.by_id.contains_key(&d.id) {
            return Err(LexiconError::Invalid { id: d.id, message: "duplicate id".into() });
        }
        let idx = self.descriptors.len();
        self.by_id.insert(d.id.clone(), idx);
        self.by_surface.insert(key, idx);
        self.descriptors.push(d);
        Ok(())
    }

    fn check_bases(&self) -> Result<(), LexiconError> {
        for d in &self.descriptors {
            if let Some(base) = &d.base_id {
                match self.get(base) {
                    None => return Err(LexiconError::DanglingBase { id: d.id.clone(), base_id: base.clone() }),
                    Some(b) if b.provenance != Provenance::Original => {
                        return Err(LexiconError::Invalid {
                            id: d.id.clone(),
                            message: format!("base_id {base:?} is not an original descriptor"),
                        })
                    }
                    Some(_) => {}
                }
            }
        }
        Ok(())
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn descriptors(&self) -> &[Descriptor] {
        &self.descriptors
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Descriptor> {
        self.by_id.get(id).map(|&i| &self.descriptors[i])
    }

    pub fn find(&self, surface: &str, language: Language) -> Option<&Descriptor> {
        self.by_surface
            .get(&(normalize_surface(surface), language))
            .map(|&i| &self.descriptors[i])
    }

    pub fn languages(&self) -> Vec<Language> {
        let mut langs: Vec<Language> = self.descriptors.iter().map(|d| d.language).collect();
        langs.sort();
        langs.dedup();
        langs
    }

    /// Keeps descriptors satisfying `keep`. Entries whose base is dropped are dropped too.
    pub fn filter(&self, mut keep: impl FnMut(&Descriptor) -> bool) -> Lexicon {
        let kept: Vec<Descriptor> = self.descriptors.iter().filter(|d| keep(d)).cloned().collect();
        let ids: std::collections::HashSet<&str> = kept.iter().map(|d| d.id.as_str()).collect();
        let kept: Vec<Descriptor> = kept
            .iter()
            .filter(|d| d.base_id.as_deref().is_none_or(|b| ids.contains(b)))
            .cloned()
            .collect();
        Lexicon::new(self.version.clone(), kept).expect("subset of a valid lexicon is valid")
    }

    /// Restricts to dispreferred originals and everything descending from them.
    pub fn dispreferred(&self) -> Lexicon {
        self.filter(|d| d.preference == Preference::Dispreferred)
    }

    pub fn stats(&self) -> LexiconStats {
        let mut s = LexiconStats { total: self.len(), ..Default::default() };
        let mut axes = std::collections::BTreeSet::new();
        for d in &self.descriptors {
            *s.by_language.entry(d.language).or_default() += 1;
            *s.by_provenance.entry(d.provenance.name().to_string()).or_default() += 1;
            if d.provenance == Provenance::Original {
                s.original += 1;
                if d.preference == Preference::Dispreferred {
                    s.original_dispreferred += 1;
                    axes.insert(d.axis.as_str());
                }
            }
        }
        s.axes_dispreferred = axes.len();
        s
    }

    /// Resolves a descriptor to the English original it descends from.
    pub fn root_of<'a>(&'a self, d: &'a Descriptor) -> &'a Descriptor {
        d.base_id.as_deref().and_then(|b| self.get(b)).unwrap_or(d)
    }

    /// Appends manually curated synonym, plural and gender forms.
    ///
    /// A derivation's `base_id` may name any entry; the new descriptor's
    /// `base_id` is set to that entry's English root, and axis and preference
    /// are inherited from it. Every derivation colliding with an existing
    /// (surface, language) pair is reported together.
    pub fn add_derived_forms(&self, derivations: &[Derivation]) -> Result<Lexicon, LexiconError> {
        if derivations.is_empty() {
            return Ok(self.clone());
        }
        let mut out = self.clone();
        let mut rejected = Vec::new();
        let mut per_base: HashMap<(String, Language), usize> = HashMap::new();
        for d in &self.descriptors {
            if d.provenance == Provenance::Derived {
                if let Some(b) = &d.base_id {
                    *per_base.entry((b.clone(), d.language)).or_default() += 1;
                }
            }
        }

        for (i, der) in derivations.iter().enumerate() {
            let base = out
                .get(&der.base_id)
                .ok_or_else(|| LexiconError::DanglingBase {
                    id: format!("derivation #{}", i + 1),
                    base_id: der.base_id.clone(),
                })?
                .clone();
            let surface = normalize_surface(&der.surface);
            if surface.trim().is_empty() {
                return Err(LexiconError::Invalid {
                    id: format!("derivation #{}", i + 1),
                    message: "empty surface".into(),
                });
            }
            if let Some(existing) = out.find(&surface, der.language) {
                rejected.push(RejectedDerivation {
                    base_id: der.base_id.clone(),
                    surface,
                    language: der.language,
                    existing_id: existing.id.clone(),
                });
                continue;
            }
            let root = out.root_of(&base).clone();
            let n = per_base.entry((root.id.clone(), der.language)).or_default();
            *n += 1;
            let mut id = format!("{}:{}:d{}", root.id, der.language, n);
            while out.by_id.contains_key(&id) {
                *n += 1;
                id = format!("{}:{}:d{}", root.id, der.language, n);
            }
            let line = out.len() + 1;
            out.push(
                Descriptor {
                    id,
                    surface,
                    language: der.language,
                    axis: base.axis.clone(),
                    preference: base.preference,
                    provenance: Provenance::Derived,
                    base_id: Some(root.id.clone()),
                },
                line,
            )?;
        }
        if !rejected.is_empty() {
            return Err(LexiconError::DuplicateDerivations(rejected));
        }
        Ok(out)
    }

    pub(crate) fn with_added(&self, extra: Vec<Descriptor>) -> Result<Lexicon, LexiconError> {
        let mut all = self.descriptors.clone();
        all.extend(extra);
        Lexicon::new(self.version.clone(), all)
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        if !self.version.is_empty() {
            writeln!(w, "# version: {}", self.version)?;
        }
        writeln!(w, "{}", LEXICON_HEADER.join("\t"))?;
        for d in &self.descriptors {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                d.id,
                d.surface,
                d.language,
                d.axis,
                d.preference.name(),
                d.provenance.name(),
                d.base_id.as_deref().unwrap_or("")
            )?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<(), LexiconError> {
        let mut buf = Vec::new();
        self.write_tsv(&mut buf).expect("writing to a Vec cannot fail");
        std::fs::write(path, buf).map_err(|source| LexiconError::Io { path: path.display().to_string(), source })
    }
}

impl fmt::Display for LexiconStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "descriptors: {}", self.total)?;
        writeln!(f, "original: {} ({} dispreferred across {} axes)", self.original, self.original_dispreferred, self.axes_dispreferred)?;
        for (lang, n) in &self.by_language {
            writeln!(f, "  {lang}: {n}")?;
        }
        for (prov, n) in &self.by_provenance {
            writeln!(f, "  {prov}: {n}")?;
        }
        Ok(())
    }
}

pub fn normalize_surface(s: &str) -> String {
    let trimmed = s.trim();
    if is_nfc(trimmed) {
        trimmed.to_string()
    } else {
        trimmed.nfc().collect()
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> LexiconError + '_ {
    move |source| LexiconError::Io { path: path.display().to_string(), source }
}

fn check_header(line: usize, got: &str, expected: &[&str]) -> Result<(), LexiconError> {
    let cols: Vec<&str> = got.split('\t').map(str::trim).collect();
    if cols != expected {
        return Err(LexiconError::Parse {
            line,
            message: format!("expected header {:?}, found {:?}", expected.join("\\t"), got),
        });
    }
    Ok(())
}

/// Iterates `(line_number, line)` over non-blank, non-comment lines, capturing
/// a `# version: ...` comment if one appears.
fn data_lines<'a>(text: &'a str, version: &mut Option<String>) -> Vec<(usize, &'a str)> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(v) = comment.trim().strip_prefix("version:") {
                *version = Some(v.trim().to_string());
            }
            continue;
        }
        out.push((i + 1, line));
    }
    out
}

pub fn parse_lexicon(text: &str, default_version: &str) -> Result<Lexicon, LexiconError> {
    let mut version = None;
    let lines = data_lines(text, &mut version);
    let mut lex = Lexicon::empty(version.unwrap_or_else(|| default_version.to_string()));
    let Some(((hline, header), rows)) = lines.split_first() else {
        return Ok(lex);
    };
    check_header(*hline, header, &LEXICON_HEADER)?;
    for &(line, row) in rows {
        let cols: Vec<&str> = row.split('\t').collect();
        if cols.len() != LEXICON_HEADER.len() {
            return Err(LexiconError::Parse {
                line,
                message: format!("expected {} tab-separated columns, found {}", LEXICON_HEADER.len(), cols.len()),
            });
        }
        let parse_err = |message: String| LexiconError::Parse { line, message };
        let base = cols[6].trim();
        let d = Descriptor {
            id: cols[0].trim().to_string(),
            surface: normalize_surface(cols[1]),
            language: cols[2].parse().map_err(|e: UnknownLanguage| parse_err(e.to_string()))?,
            axis: cols[3].trim().to_string(),
            preference: cols[4].trim().parse().map_err(parse_err)?,
            provenance: cols[5].trim().parse().map_err(parse_err)?,
            base_id: (!base.is_empty()).then(|| base.to_string()),
        };
        if d.surface.is_empty() {
            return Err(parse_err("empty surface".into()));
        }
        lex.push(d, line)?;
    }
    lex.check_bases()?;
    Ok(lex)
}

/// Reads a lexicon TSV file.
pub fn load_lexicon(path: &Path) -> Result<Lexicon, LexiconError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    let default_version = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    parse_lexicon(&text, default_version)
}

pub fn parse_derivations(text: &str) -> Result<Vec<Derivation>, LexiconError> {
    let mut version = None;
    let lines = data_lines(text, &mut version);
    let Some(((hline, header), rows)) = lines.split_first() else {
        return Ok(Vec::new());
    };
    check_header(*hline, header, &DERIVATIONS_HEADER)?;
    rows.iter()
        .map(|&(line, row)| {
            let cols: Vec<&str> = row.split('\t').collect();
            if cols.len() != DERIVATIONS_HEADER.len() {
                return Err(LexiconError::Parse {
                    line,
                    message: format!("expected 3 tab-separated columns, found {}", cols.len()),
                });
            }
            let surface = normalize_surface(cols[1]);
            if surface.is_empty() {
                return Err(LexiconError::Parse { line, message: "empty surface".into() });
            }
            Ok(Derivation {
                base_id: cols[0].trim().to_string(),
                surface,
                language: cols[2]
                    .parse()
                    .map_err(|e: UnknownLanguage| LexiconError::Parse { line, message: e.to_string() })?,
            })
        })
        .collect()
}

pub fn load_derivations(path: &Path) -> Result<Vec<Derivation>, LexiconError> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    parse_derivations(&text)
}
