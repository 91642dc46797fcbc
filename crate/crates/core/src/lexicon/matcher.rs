use std::borrow::Cow;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use unicode_normalization::{is_nfc, UnicodeNormalization};
use unicode_segmentation::UnicodeSegmentation;

use super::Lexicon;
use crate::types::Language;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapPolicy {
    #[default]
    LongestMatchWins,
    ReportAll,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchOptions {
    pub case_sensitive: bool,
    /// Segment words per UAX #29. When off, words are whitespace-delimited
    /// runs with surrounding punctuation stripped.
    pub unicode_word_boundaries: bool,
    pub overlap_policy: OverlapPolicy,
}

impl Default for MatchOptions {
    fn default() -> Self {
        MatchOptions { case_sensitive: true, unicode_word_boundaries: true, overlap_policy: OverlapPolicy::LongestMatchWins }
    }
}

/// One occurrence of a descriptor. `char_span` is a half-open byte range into
/// the NFC form of the unit text.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DescriptorMatch {
    pub descriptor_id: String,
    pub unit_id: String,
    pub char_span: (usize, usize),
    pub word_index: usize,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Token<'a> {
    pub start: usize,
    pub end: usize,
    pub text: &'a str,
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Word tokens with byte offsets. Elisions ("l'arabe", "dell’Opfer") are split
/// at the apostrophe so the bare word is matchable.
pub(crate) fn tokenize(text: &str, unicode: bool) -> Vec<Token<'_>> {
    fn push_split<'t>(out: &mut Vec<Token<'t>>, start: usize, word: &'t str) {
        let mut seg_start = 0;
        for (i, c) in word.char_indices() {
            if is_apostrophe(c) {
                if i > seg_start {
                    out.push(Token { start: start + seg_start, end: start + i, text: &word[seg_start..i] });
                }
                seg_start = i + c.len_utf8();
            }
        }
        if seg_start < word.len() {
            out.push(Token { start: start + seg_start, end: start + word.len(), text: &word[seg_start..] });
        }
    }
    let mut out = Vec::new();
    if unicode {
        for (start, word) in text.unicode_word_indices() {
            push_split(&mut out, start, word);
        }
    } else {
        for run in text.split_whitespace() {
            let word = run.trim_matches(|c: char| !c.is_alphanumeric());
            if !word.is_empty() {
                push_split(&mut out, word.as_ptr() as usize - text.as_ptr() as usize, word);
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Gap {
    Whitespace,
    Literal(String),
}

impl Gap {
    fn of(s: &str) -> Gap {
        if s.chars().all(char::is_whitespace) {
            Gap::Whitespace
        } else {
            Gap::Literal(s.to_string())
        }
    }

    fn accepts(&self, s: &str) -> bool {
        match self {
            Gap::Whitespace => !s.is_empty() && s.chars().all(char::is_whitespace),
            Gap::Literal(l) => l == s,
        }
    }
}

#[derive(Debug, Clone)]
struct Pattern {
    descriptor: usize,
    words: Vec<String>,
    gaps: Vec<Gap>,
}

/// Compiled matcher for one or more languages of a lexicon.
///
/// Immutable and `Sync`; a single instance can serve many worker threads.
#[derive(Debug, Clone)]
pub struct DescriptorMatcher<'a> {
    lexicon: &'a Lexicon,
    options: MatchOptions,
    patterns: Vec<Pattern>,
    by_first: HashMap<String, Vec<usize>>,
}

impl<'a> DescriptorMatcher<'a> {
    pub fn new(lexicon: &'a Lexicon, languages: &[Language], options: MatchOptions) -> Self {
        let mut patterns = Vec::new();
        let mut by_first: HashMap<String, Vec<usize>> = HashMap::new();
        for (idx, d) in lexicon.descriptors().iter().enumerate() {
            if !languages.contains(&d.language) {
                continue;
            }
            let toks = tokenize(&d.surface, options.unicode_word_boundaries);
            if toks.is_empty() {
                continue;
            }
            let words: Vec<String> = toks.iter().map(|t| key(t.text, options.case_sensitive).into_owned()).collect();
            let gaps = toks.windows(2).map(|w| Gap::of(&d.surface[w[0].end..w[1].start])).collect();
            by_first.entry(words[0].clone()).or_default().push(patterns.len());
            patterns.push(Pattern { descriptor: idx, words, gaps });
        }
        DescriptorMatcher { lexicon, options, patterns, by_first }
    }

    pub fn for_language(lexicon: &'a Lexicon, language: Language, options: MatchOptions) -> Self {
        Self::new(lexicon, &[language], options)
    }

    pub fn options(&self) -> MatchOptions {
        self.options
    }

    pub fn lexicon(&self) -> &'a Lexicon {
        self.lexicon
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    /// Finds every whole-word occurrence in `text`, sorted by span start.
    pub fn find(&self, unit_id: &str, text: &str) -> Vec<DescriptorMatch> {
        if self.patterns.is_empty() {
            return Vec::new();
        }
        let text: Cow<'_, str> = if is_nfc(text) { Cow::Borrowed(text) } else { Cow::Owned(text.nfc().collect()) };
        let tokens = tokenize(&text, self.options.unicode_word_boundaries);
        let keys: Vec<Cow<'_, str>> = tokens.iter().map(|t| key(t.text, self.options.case_sensitive)).collect();

        // (word_index, word_len, pattern)
        let mut candidates: Vec<(usize, usize, usize)> = Vec::new();
        for (i, k) in keys.iter().enumerate() {
            let Some(pids) = self.by_first.get(k.as_ref()) else { continue };
            for &pid in pids {
                let p = &self.patterns[pid];
                let n = p.words.len();
                if i + n > tokens.len() {
                    continue;
                }
                let words_ok = (1..n).all(|j| keys[i + j] == p.words[j]);
                let gaps_ok = words_ok
                    && (1..n).all(|j| p.gaps[j - 1].accepts(&text[tokens[i + j - 1].end..tokens[i + j].start]));
                if gaps_ok {
                    candidates.push((i, n, pid));
                }
            }
        }

        let span = |&(i, n, _): &(usize, usize, usize)| (tokens[i].start, tokens[i + n - 1].end);
        let chosen: Vec<(usize, usize, usize)> = match self.options.overlap_policy {
            OverlapPolicy::ReportAll => candidates,
            OverlapPolicy::LongestMatchWins => {
                let mut ordered = candidates.clone();
                ordered.sort_by(|a, b| {
                    let (sa, ea) = span(a);
                    let (sb, eb) = span(b);
                    b.1.cmp(&a.1)
                        .then((eb - sb).cmp(&(ea - sa)))
                        .then(sa.cmp(&sb))
                        .then(self.patterns[a.2].descriptor.cmp(&self.patterns[b.2].descriptor))
                });
                let mut taken: Vec<(usize, usize, usize)> = Vec::new();
                for c in ordered {
                    let (s, e) = span(&c);
                    if taken.iter().all(|t| {
                        let (ts, te) = span(t);
                        e <= ts || te <= s
                    }) {
                        taken.push(c);
                    }
                }
                taken
            }
        };

        let mut out: Vec<DescriptorMatch> = chosen
            .iter()
            .map(|c| {
                let d = &self.lexicon.descriptors()[self.patterns[c.2].descriptor];
                DescriptorMatch {
                    descriptor_id: d.id.clone(),
                    unit_id: unit_id.to_string(),
                    char_span: span(c),
                    word_index: c.0,
                }
            })
            .collect();
        out.sort_by(|a, b| {
            a.char_span
                .0
                .cmp(&b.char_span.0)
                .then(a.char_span.1.cmp(&b.char_span.1))
                .then(a.descriptor_id.cmp(&b.descriptor_id))
        });
        out
    }
}

fn key(word: &str, case_sensitive: bool) -> Cow<'_, str> {
    if case_sensitive {
        Cow::Borrowed(word)
    } else {
        Cow::Owned(word.to_lowercase())
    }
}

/// Finds occurrences of `language` descriptors in `text`.
pub fn match_descriptors(
    unit_id: &str,
    text: &str,
    lexicon: &Lexicon,
    language: Language,
    options: MatchOptions,
) -> Vec<DescriptorMatch> {
    DescriptorMatcher::for_language(lexicon, language, options).find(unit_id, text)
}
