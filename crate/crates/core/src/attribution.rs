//! Top-k membership and sign consistency of descriptor word attributions.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::bst::csv_field;
use crate::io::{read_jsonl_numbered, IoError};
use crate::lexicon::DescriptorMatcher;
use crate::types::{Label, Language};

#[derive(Debug, thiserror::Error)]
pub enum AttributionError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{path}:{line}: {message}")]
    Invalid { path: String, line: usize, message: String },
    #[error("at least one k is required")]
    NoK,
    #[error("{0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionRecord {
    pub unit_id: String,
    pub predicted: Label,
    pub true_label: Label,
    /// Class the attributions were computed against.
    pub attribution_target: Label,
    pub words: Vec<String>,
    pub attributions: Vec<f64>,
}

impl AttributionRecord {
    pub fn validate(&self) -> Result<(), String> {
        if self.words.len() != self.attributions.len() {
            return Err(format!(
                "unit {:?}: {} words but {} attributions",
                self.unit_id,
                self.words.len(),
                self.attributions.len()
            ));
        }
        if let Some((i, a)) = self.attributions.iter().enumerate().find(|(_, a)| !(-1.0..=1.0).contains(*a)) {
            return Err(format!("unit {:?}: attribution {a} at word {i} outside [-1, 1]", self.unit_id));
        }
        Ok(())
    }

    /// Attribution of word `i` expressed toward dismissal.
    pub fn toward_dismissal(&self, i: usize) -> f64 {
        match self.attribution_target {
            Label::Dismissal => self.attributions[i],
            Label::Approval => -self.attributions[i],
        }
    }

    /// Rank of every word (0 = highest attribution); ties keep word order.
    pub fn ranks(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.attributions.len()).collect();
        order.sort_by(|&a, &b| self.attributions[b].total_cmp(&self.attributions[a]).then(a.cmp(&b)));
        let mut rank = vec![0; order.len()];
        for (r, &i) in order.iter().enumerate() {
            rank[i] = r;
        }
        rank
    }
}

pub fn load_attributions(path: &Path) -> Result<Vec<AttributionRecord>, AttributionError> {
    let rows: Vec<(usize, AttributionRecord)> = read_jsonl_numbered(path)?;
    rows.into_iter()
        .map(|(line, r)| {
            r.validate()
                .map(|_| r)
                .map_err(|message| AttributionError::Invalid { path: path.display().to_string(), line, message })
        })
        .collect()
}

/// Record subset selection; all set conditions must hold.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct RecordFilter {
    pub predicted: Option<Label>,
    pub true_label: Option<Label>,
    pub misclassified_only: bool,
}

impl RecordFilter {
    pub fn accepts(&self, r: &AttributionRecord) -> bool {
        self.predicted.is_none_or(|p| p == r.predicted)
            && self.true_label.is_none_or(|t| t == r.true_label)
            && (!self.misclassified_only || r.predicted != r.true_label)
    }
}

/// A descriptor match located on the record's word sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct WordOccurrence {
    pub descriptor: String,
    pub language: Language,
    pub words: std::ops::Range<usize>,
}

/// Matches descriptors over the words joined by single spaces and maps each
/// match back to the word indices it overlaps.
pub fn locate_descriptors(record: &AttributionRecord, matcher: &DescriptorMatcher<'_>) -> Vec<WordOccurrence> {
    let mut text = String::new();
    let mut bounds = Vec::with_capacity(record.words.len());
    for (i, w) in record.words.iter().enumerate() {
        if i > 0 {
            text.push(' ');
        }
        let start = text.len();
        text.extend(w.nfc());
        bounds.push((start, text.len()));
    }
    let lexicon = matcher.lexicon();
    matcher
        .find(&record.unit_id, &text)
        .into_iter()
        .filter_map(|m| {
            let (s, e) = m.char_span;
            let first = bounds.partition_point(|&(_, we)| we <= s);
            let last = bounds.partition_point(|&(ws, _)| ws < e);
            let d = lexicon.get(&m.descriptor_id)?;
            (first < last).then(|| WordOccurrence { descriptor: d.surface.clone(), language: d.language, words: first..last })
        })
        .collect()
}

/// Counts indexed `[predicted][true_label]`.
pub type Breakdown = [[u64; 2]; 2];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TopKReport {
    pub descriptor: String,
    pub language: Language,
    pub k: usize,
    pub occurrences_in_topk: u64,
    pub occurrences_total: u64,
    pub in_topk_by_cell: Breakdown,
    pub total_by_cell: Breakdown,
}

/// One row per (descriptor, k), sorted by descriptor, language, then k.
pub fn topk_membership(
    records: &[AttributionRecord],
    matcher: &DescriptorMatcher<'_>,
    ks: &[usize],
) -> Result<Vec<TopKReport>, AttributionError> {
    if ks.is_empty() {
        return Err(AttributionError::NoK);
    }
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let mut acc: BTreeMap<(String, Language, usize), TopKReport> = BTreeMap::new();
    for r in records {
        let occ = locate_descriptors(r, matcher);
        if occ.is_empty() {
            continue;
        }
        let rank = r.ranks();
        let (p, t) = (r.predicted.index(), r.true_label.index());
        for o in &occ {
            let best = o.words.clone().map(|i| rank[i]).min().expect("non-empty occurrence");
            for &k in &ks {
                let row = acc.entry((o.descriptor.clone(), o.language, k)).or_insert_with(|| TopKReport {
                    descriptor: o.descriptor.clone(),
                    language: o.language,
                    k,
                    occurrences_in_topk: 0,
                    occurrences_total: 0,
                    in_topk_by_cell: [[0; 2]; 2],
                    total_by_cell: [[0; 2]; 2],
                });
                row.occurrences_total += 1;
                row.total_by_cell[p][t] += 1;
                if best < k {
                    row.occurrences_in_topk += 1;
                    row.in_topk_by_cell[p][t] += 1;
                }
            }
        }
    }
    Ok(acc.into_values().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ConsistencyConfig {
    pub threshold: f64,
    pub min_occurrences: u64,
}

impl Default for ConsistencyConfig {
    fn default() -> Self {
        ConsistencyConfig { threshold: 0.8, min_occurrences: 10 }
    }
}

impl ConsistencyConfig {
    pub fn validate(&self) -> Result<(), AttributionError> {
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(AttributionError::Config(format!("consistency threshold {} outside [0, 1]", self.threshold)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub descriptor: String,
    pub language: Language,
    pub count_positive_toward_dismissal: u64,
    pub count_negative_toward_dismissal: u64,
    pub count_zero: u64,
    pub consistency: f64,
    pub flagged: bool,
}

impl ConsistencyReport {
    pub fn total(&self) -> u64 {
        self.count_positive_toward_dismissal + self.count_negative_toward_dismissal + self.count_zero
    }
}

/// Sign of each occurrence's summed attribution, expressed toward dismissal.
/// Exact zeros count toward the total but toward neither sign.
pub fn consistency_report(
    records: &[AttributionRecord],
    matcher: &DescriptorMatcher<'_>,
    config: &ConsistencyConfig,
) -> Result<Vec<ConsistencyReport>, AttributionError> {
    config.validate()?;
    let mut acc: BTreeMap<(String, Language), [u64; 3]> = BTreeMap::new();
    for r in records {
        for o in locate_descriptors(r, matcher) {
            let s: f64 = o.words.clone().map(|i| r.toward_dismissal(i)).sum();
            let c = acc.entry((o.descriptor, o.language)).or_default();
            match s.partial_cmp(&0.0) {
                Some(std::cmp::Ordering::Greater) => c[0] += 1,
                Some(std::cmp::Ordering::Less) => c[1] += 1,
                _ => c[2] += 1,
            }
        }
    }
    Ok(acc
        .into_iter()
        .map(|((descriptor, language), [pos, neg, zero])| {
            let total = pos + neg + zero;
            let consistency = if total == 0 { 0.0 } else { pos.max(neg) as f64 / total as f64 };
            ConsistencyReport {
                descriptor,
                language,
                count_positive_toward_dismissal: pos,
                count_negative_toward_dismissal: neg,
                count_zero: zero,
                consistency,
                flagged: total >= config.min_occurrences && consistency >= config.threshold,
            }
        })
        .collect())
}

pub const TOPK_CSV_HEADER: &str = "descriptor,language,k,occurrences_in_topk,occurrences_total,\
in_topk_p0_t0,in_topk_p0_t1,in_topk_p1_t0,in_topk_p1_t1,total_p0_t0,total_p0_t1,total_p1_t0,total_p1_t1";

pub fn topk_csv(rows: &[TopKReport]) -> String {
    let mut out = format!("{TOPK_CSV_HEADER}\n");
    for r in rows {
        let cells = |b: &Breakdown| format!("{},{},{},{}", b[0][0], b[0][1], b[1][0], b[1][1]);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            csv_field(&r.descriptor),
            r.language,
            r.k,
            r.occurrences_in_topk,
            r.occurrences_total,
            cells(&r.in_topk_by_cell),
            cells(&r.total_by_cell)
        );
    }
    out
}

pub const CONSISTENCY_CSV_HEADER: &str =
    "descriptor,language,count_positive_toward_dismissal,count_negative_toward_dismissal,count_zero,consistency,flagged";

pub fn consistency_csv(rows: &[ConsistencyReport]) -> String {
    let mut out = format!("{CONSISTENCY_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.6},{}",
            csv_field(&r.descriptor),
            r.language,
            r.count_positive_toward_dismissal,
            r.count_negative_toward_dismissal,
            r.count_zero,
            r.consistency,
            r.flagged
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lexicon::{parse_lexicon, Lexicon, MatchOptions};
    use Label::{Approval as A, Dismissal as D};

    fn lexicon() -> Lexicon {
        parse_lexicon(
            "id\tsurface\tlanguage\taxis\tpreference\tprovenance\tbase_id\n\
             victim\tvictim\ten\tability\tdispreferred\toriginal\t\n\
             victim:fr\tvictime\tfr\tability\tdispreferred\ttranslated\tvictim\n\
             endanger\tat risk\ten\tability\tdispreferred\toriginal\t\n",
            "t",
        )
        .unwrap()
    }

    fn rec(words: &[&str], attrs: &[f64], target: Label) -> AttributionRecord {
        AttributionRecord {
            unit_id: "d#0".into(),
            predicted: D,
            true_label: A,
            attribution_target: target,
            words: words.iter().map(|s| s.to_string()).collect(),
            attributions: attrs.to_vec(),
        }
    }

    fn matcher(lex: &Lexicon) -> DescriptorMatcher<'_> {
        DescriptorMatcher::new(lex, &lex.languages(), MatchOptions::default())
    }

    fn ranked(pos: usize, n: usize, word: &str) -> AttributionRecord {
        let mut words = vec!["x"; n];
        words[pos] = word;
        // strictly decreasing attributions except the descriptor, which sits at rank `pos`
        let attrs: Vec<f64> = (0..n).map(|i| 0.9 - i as f64 * 0.001).collect();
        rec(&words, &attrs, D)
    }

    #[test]
    fn rank_cutoffs() {
        let lex = lexicon();
        let m = matcher(&lex);
        let r = topk_membership(&[ranked(4, 50, "victime")], &m, &[10]).unwrap();
        assert_eq!((r[0].occurrences_in_topk, r[0].occurrences_total), (1, 1));
        let r = topk_membership(&[ranked(24, 50, "victime")], &m, &[20]).unwrap();
        assert_eq!((r[0].occurrences_in_topk, r[0].occurrences_total), (0, 1));
        assert_eq!(r[0].total_by_cell[0][1], 1);
    }

    #[test]
    fn multiword_any_word_rule() {
        let lex = lexicon();
        let m = matcher(&lex);
        let mut words = vec!["x"; 60];
        words[3] = "at";
        words[4] = "risk";
        let mut attrs = vec![0.0; 60];
        attrs[3] = 0.5;
        attrs[4] = -0.9;
        let r = topk_membership(&[rec(&words, &attrs, D)], &m, &[1, 10]).unwrap();
        assert_eq!(r.len(), 2);
        assert!(r.iter().all(|x| x.occurrences_total == 1 && x.occurrences_in_topk == 1));
    }

    #[test]
    fn ties_break_by_position() {
        let r = rec(&["a", "b", "c"], &[0.1, 0.1, 0.1], D);
        assert_eq!(r.ranks(), vec![0, 1, 2]);
    }

    #[test]
    fn empty_ks_rejected() {
        let lex = lexicon();
        assert!(matches!(topk_membership(&[], &matcher(&lex), &[]), Err(AttributionError::NoK)));
    }

    #[test]
    fn consistency_examples() {
        let lex = lexicon();
        let m = matcher(&lex);
        let all: Vec<_> = (0..10).map(|_| rec(&["la", "victime"], &[0.0, 0.3], D)).collect();
        let c = consistency_report(&all, &m, &ConsistencyConfig::default()).unwrap();
        assert_eq!(c[0].consistency, 1.0);
        assert!(c[0].flagged);
        let half: Vec<_> = (0..10).map(|i| rec(&["victime"], &[if i < 5 { 0.3 } else { -0.3 }], D)).collect();
        let c = consistency_report(&half, &m, &ConsistencyConfig::default()).unwrap();
        assert_eq!(c[0].consistency, 0.5);
        assert!(!c[0].flagged);
    }

    #[test]
    fn target_flip_is_involution() {
        let lex = lexicon();
        let m = matcher(&lex);
        let recs: Vec<_> = (0..12).map(|i| rec(&["victim", "y"], &[if i % 3 == 0 { -0.2 } else { 0.4 }, 0.1], D)).collect();
        let flipped: Vec<_> = recs
            .iter()
            .map(|r| AttributionRecord {
                attribution_target: A,
                attributions: r.attributions.iter().map(|a| -a).collect(),
                ..r.clone()
            })
            .collect();
        let cfg = ConsistencyConfig::default();
        assert_eq!(consistency_report(&recs, &m, &cfg).unwrap(), consistency_report(&flipped, &m, &cfg).unwrap());
    }

    #[test]
    fn schema_validation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.jsonl");
        let ok = r#"{"unit_id":"d#0","predicted":0,"true_label":1,"attribution_target":0,"words":["a","b"],"attributions":[0.1,-0.2]}"#;
        std::fs::write(&p, format!("{ok}\n{ok}\n")).unwrap();
        assert_eq!(load_attributions(&p).unwrap().len(), 2);

        let bad = r#"{"unit_id":"d#1","predicted":0,"true_label":1,"attribution_target":0,"words":["a","b","c","d","e"],"attributions":[0.1,0.1,0.1,0.1]}"#;
        std::fs::write(&p, format!("{ok}\n{bad}\n")).unwrap();
        match load_attributions(&p) {
            Err(AttributionError::Invalid { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("5 words but 4"));
            }
            other => panic!("{other:?}"),
        }

        let range = ok.replace("-0.2", "-1.5");
        std::fs::write(&p, range).unwrap();
        assert!(load_attributions(&p).is_err());

        std::fs::write(&p, "").unwrap();
        assert!(load_attributions(&p).unwrap().is_empty());
    }

    #[test]
    fn filters() {
        let r = rec(&["a"], &[0.0], D);
        assert!(RecordFilter::default().accepts(&r));
        assert!(RecordFilter { misclassified_only: true, ..Default::default() }.accepts(&r));
        assert!(!RecordFilter { predicted: Some(A), ..Default::default() }.accepts(&r));
    }

    #[test]
    fn csv_headers() {
        assert!(topk_csv(&[]).starts_with("descriptor,language,k,"));
        assert!(consistency_csv(&[]).ends_with("flagged\n"));
    }
}
