//! Chunk-vote aggregation, classification metrics and per-descriptor outcome tables.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::diagnostics::Diagnostic;
use crate::lexicon::{DescriptorMatch, Lexicon};
use crate::preprocess::doc_id_of;
use crate::types::{Label, Language};

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("document {0:?} has no chunk predictions")]
    NoChunks(String),
    #[error("classification report needs at least one (predicted, true) pair")]
    EmptyInput,
    #[error("{} unit(s) lack predictions: {}", .0.len(), .0.join(", "))]
    Coverage(Vec<String>),
    #[error("prediction for {unit_id:?}: {message}")]
    InvalidPrediction { unit_id: String, message: String },
    #[error("no ground-truth label for document {0:?}")]
    MissingTruth(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub unit_id: String,
    pub predicted: Label,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scores: Option<[f64; 2]>,
}

impl PredictionRecord {
    pub fn validate(&self) -> Result<(), EvalError> {
        if let Some(s) = self.scores {
            if s.iter().any(|x| !(0.0..=1.0).contains(x)) {
                return Err(EvalError::InvalidPrediction {
                    unit_id: self.unit_id.clone(),
                    message: format!("scores {s:?} outside [0, 1]"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    /// Majority of chunk labels; an even split goes to dismissal.
    #[default]
    MajorityClass,
    /// Larger summed class score; equal sums go to dismissal.
    ScoreSum,
}

/// Verdict for one document from its chunk predictions. The returned record
/// is keyed by `doc_id`; scores are the chunk mean when every chunk has them.
pub fn aggregate_document(doc_id: &str, chunks: &[&PredictionRecord], tie_break: TieBreak) -> Result<PredictionRecord, EvalError> {
    if chunks.is_empty() {
        return Err(EvalError::NoChunks(doc_id.to_string()));
    }
    let mean_scores = chunks.iter().map(|c| c.scores).collect::<Option<Vec<_>>>().map(|all| {
        let n = all.len() as f64;
        let s0: f64 = all.iter().map(|s| s[0]).sum();
        let s1: f64 = all.iter().map(|s| s[1]).sum();
        [s0 / n, s1 / n]
    });
    let predicted = match tie_break {
        TieBreak::MajorityClass => {
            let ones = chunks.iter().filter(|c| c.predicted == Label::Approval).count();
            if 2 * ones > chunks.len() {
                Label::Approval
            } else {
                Label::Dismissal
            }
        }
        TieBreak::ScoreSum => {
            let (mut s0, mut s1) = (0.0, 0.0);
            for c in chunks {
                let s = c.scores.unwrap_or(match c.predicted {
                    Label::Dismissal => [1.0, 0.0],
                    Label::Approval => [0.0, 1.0],
                });
                s0 += s[0];
                s1 += s[1];
            }
            if s1 > s0 {
                Label::Approval
            } else {
                Label::Dismissal
            }
        }
    };
    Ok(PredictionRecord { unit_id: doc_id.to_string(), predicted, scores: mean_scores })
}

/// Groups unit predictions by document (`doc_id#index` ids) and aggregates
/// each group. Output is sorted by document id.
pub fn aggregate_votes(predictions: &[PredictionRecord], tie_break: TieBreak) -> Result<Vec<PredictionRecord>, EvalError> {
    let mut groups: BTreeMap<&str, Vec<&PredictionRecord>> = BTreeMap::new();
    for p in predictions {
        p.validate()?;
        groups.entry(doc_id_of(&p.unit_id)).or_default().push(p);
    }
    groups.into_iter().map(|(doc, chunks)| aggregate_document(doc, &chunks, tie_break)).collect()
}

/// Lists every expected unit id missing from `predictions`.
pub fn check_coverage<'a>(expected: impl IntoIterator<Item = &'a str>, predictions: &[PredictionRecord]) -> Result<(), EvalError> {
    let have: HashSet<&str> = predictions.iter().map(|p| p.unit_id.as_str()).collect();
    let mut missing: Vec<String> = expected.into_iter().filter(|u| !have.contains(u)).map(str::to_string).collect();
    missing.sort();
    missing.dedup();
    if missing.is_empty() {
        Ok(())
    } else {
        Err(EvalError::Coverage(missing))
    }
}

/// Binary confusion counts with dismissal as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub tp0: u64,
    pub fn0: u64,
    pub fp0: u64,
    pub tn0: u64,
}

impl ConfusionMatrix {
    pub fn from_pairs(pairs: &[(Label, Label)]) -> Self {
        let mut m = ConfusionMatrix::default();
        for &(pred, truth) in pairs {
            match (pred, truth) {
                (Label::Dismissal, Label::Dismissal) => m.tp0 += 1,
                (Label::Approval, Label::Dismissal) => m.fn0 += 1,
                (Label::Dismissal, Label::Approval) => m.fp0 += 1,
                (Label::Approval, Label::Approval) => m.tn0 += 1,
            }
        }
        m
    }

    pub fn total(&self) -> u64 {
        self.tp0 + self.fn0 + self.fp0 + self.tn0
    }

    /// (true positives, false positives, false negatives) with `label` as the positive class.
    pub fn counts_for(&self, label: Label) -> (u64, u64, u64) {
        match label {
            Label::Dismissal => (self.tp0, self.fp0, self.fn0),
            Label::Approval => (self.tn0, self.fn0, self.fp0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub dismissal: ClassMetrics,
    pub approval: ClassMetrics,
    pub accuracy: f64,
    pub macro_avg: Averages,
    pub weighted_avg: Averages,
    pub support: u64,
    pub confusion: ConfusionMatrix,
    #[serde(skip)]
    pub diagnostics: Vec<Diagnostic>,
}

fn ratio_or_zero(num: u64, den: u64, what: &str, label: Label, diags: &mut Vec<Diagnostic>) -> f64 {
    if den == 0 {
        diags.push(Diagnostic::warning("metrics.zero_division", format!("{what} for {label} is undefined; reported as 0")));
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Support-weighted mean of per-class values.
pub fn weighted_average(values: &[f64], supports: &[u64]) -> f64 {
    let total: u64 = supports.iter().sum();
    if total == 0 {
        return 0.0;
    }
    values.iter().zip(supports).map(|(v, &s)| v * s as f64).sum::<f64>() / total as f64
}

impl MetricsReport {
    pub fn from_confusion(m: ConfusionMatrix) -> Self {
        let mut diags = Vec::new();
        let class = |label: Label, diags: &mut Vec<Diagnostic>| {
            let (tp, fp, fn_) = m.counts_for(label);
            let precision = ratio_or_zero(tp, tp + fp, "precision", label, diags);
            let recall = ratio_or_zero(tp, tp + fn_, "recall", label, diags);
            let f1 = if precision + recall == 0.0 { 0.0 } else { 2.0 * precision * recall / (precision + recall) };
            ClassMetrics { precision, recall, f1, support: tp + fn_ }
        };
        let dismissal = class(Label::Dismissal, &mut diags);
        let approval = class(Label::Approval, &mut diags);
        let total = m.total();
        let accuracy = if total == 0 { 0.0 } else { (m.tp0 + m.tn0) as f64 / total as f64 };
        let mut report = Self::from_class_metrics(dismissal, approval);
        report.accuracy = accuracy;
        report.confusion = m;
        report.diagnostics = diags;
        report
    }

    /// Assembles averages from per-class values alone; accuracy is left as NaN.
    pub fn from_class_metrics(dismissal: ClassMetrics, approval: ClassMetrics) -> Self {
        let c = [dismissal, approval];
        let supports = [dismissal.support, approval.support];
        let pick = |f: fn(&ClassMetrics) -> f64| [f(&c[0]), f(&c[1])];
        let (p, r, f) = (pick(|m| m.precision), pick(|m| m.recall), pick(|m| m.f1));
        MetricsReport {
            dismissal,
            approval,
            accuracy: f64::NAN,
            macro_avg: Averages { precision: (p[0] + p[1]) / 2.0, recall: (r[0] + r[1]) / 2.0, f1: (f[0] + f[1]) / 2.0 },
            weighted_avg: Averages {
                precision: weighted_average(&p, &supports),
                recall: weighted_average(&r, &supports),
                f1: weighted_average(&f, &supports),
            },
            support: supports.iter().sum(),
            confusion: ConfusionMatrix::default(),
            diagnostics: Vec::new(),
        }
    }

    pub fn class(&self, label: Label) -> &ClassMetrics {
        match label {
            Label::Dismissal => &self.dismissal,
            Label::Approval => &self.approval,
        }
    }

    /// Six-column text table: tag, label, precision, recall, F1, support.
    pub fn render_table(&self, tag: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<14} {:<14} {:>9} {:>9} {:>9} {:>9}", "Run", "Label", "Precision", "Recall", "F1-Score", "Support");
        for (i, label) in Label::ALL.into_iter().enumerate() {
            let c = self.class(label);
            let name = format!("{} ({})", capitalize(label.name()), label.as_u8());
            let t = if i == 0 { tag } else { "" };
            let _ = writeln!(s, "{:<14} {:<14} {:>9.2} {:>9.2} {:>9.2} {:>9}", t, name, c.precision, c.recall, c.f1, c.support);
        }
        let _ = writeln!(s, "{:<14} {:<14} {:>9} {:>9} {:>9.2} {:>9}", "Accuracy", "-", "-", "-", self.accuracy, self.support);
        for (name, a) in [("Macro Avg", &self.macro_avg), ("Weighted Avg", &self.weighted_avg)] {
            let _ = writeln!(s, "{:<14} {:<14} {:>9.2} {:>9.2} {:>9.2} {:>9}", name, "-", a.precision, a.recall, a.f1, self.support);
        }
        s
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

pub fn classification_report(pairs: &[(Label, Label)]) -> Result<MetricsReport, EvalError> {
    if pairs.is_empty() {
        return Err(EvalError::EmptyInput);
    }
    Ok(MetricsReport::from_confusion(ConfusionMatrix::from_pairs(pairs)))
}

/// Parses counts printed with thousands separators, including the European
/// style `14.026` (= 14026).
pub fn parse_grouped_count(s: &str) -> Option<u64> {
    let s = s.trim();
    let groups: Vec<&str> = s.split(['.', ',', ' ', '\u{2009}', '\'']).collect();
    if groups.len() > 1 && (groups[1..].iter().any(|g| g.len() != 3) || groups[0].is_empty() || groups[0].len() > 3) {
        return None;
    }
    let digits: String = groups.concat();
    if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DescriptorPerformance {
    pub descriptor: String,
    pub language: Language,
    pub correct: u64,
    pub wrong: u64,
}

/// For each descriptor, how many evaluated documents containing it received a
/// correct or wrong verdict. Documents are counted once per descriptor.
pub fn per_descriptor_performance(
    verdicts: &[PredictionRecord],
    truths: &HashMap<String, Label>,
    matches: &[DescriptorMatch],
    lexicon: &Lexicon,
    language: Option<Language>,
) -> Result<Vec<DescriptorPerformance>, EvalError> {
    let verdict_of: HashMap<&str, Label> = verdicts.iter().map(|v| (v.unit_id.as_str(), v.predicted)).collect();
    let mut docs: BTreeMap<(&str, Language), BTreeSet<&str>> = BTreeMap::new();
    for m in matches {
        let Some(d) = lexicon.get(&m.descriptor_id) else { continue };
        if language.is_some_and(|l| l != d.language) {
            continue;
        }
        let doc = doc_id_of(&m.unit_id);
        if verdict_of.contains_key(doc) {
            docs.entry((d.surface.as_str(), d.language)).or_default().insert(doc);
        }
    }
    let mut rows = Vec::with_capacity(docs.len());
    for ((surface, lang), set) in docs {
        let (mut correct, mut wrong) = (0, 0);
        for doc in set {
            let truth = truths.get(doc).ok_or_else(|| EvalError::MissingTruth(doc.to_string()))?;
            if verdict_of[doc] == *truth {
                correct += 1;
            } else {
                wrong += 1;
            }
        }
        rows.push(DescriptorPerformance { descriptor: surface.to_string(), language: lang, correct, wrong });
    }
    rows.sort_by(|a, b| {
        (b.correct + b.wrong)
            .cmp(&(a.correct + a.wrong))
            .then_with(|| a.descriptor.cmp(&b.descriptor))
            .then(a.language.cmp(&b.language))
    });
    Ok(rows)
}

pub fn descriptor_performance_csv(rows: &[DescriptorPerformance]) -> String {
    let mut out = String::from("descriptor,language,correct,wrong\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", crate::bst::csv_field(&r.descriptor), r.language, r.correct, r.wrong);
    }
    out
}
