//! One-sided exact binomial tests of descriptor/label co-occurrence.
//!
//! For each descriptor surface with at least `min_count` occurrences, the
//! number of occurrences in dismissal units is tested against
//! `Binomial(n, pi0_dismissal)` and the number in approval units against
//! `Binomial(n, pi0_approval)`, each with the upper-tail p-value
//! `P(X >= observed)`.

mod binomial;
mod report;

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

pub use binomial::{
    binomial_lower_tail, binomial_upper_tail, ln_binomial_lower_tail, ln_binomial_pmf, ln_binomial_upper_tail,
};
pub(crate) use report::csv_field;
pub use report::{biased_json, bst_csv, format_p_value, scatter_csv, BST_CSV_HEADER};

use crate::diagnostics::Diagnostic;
use crate::lexicon::{DescriptorMatch, Lexicon};
use crate::types::Label;

#[derive(Debug, thiserror::Error)]
pub enum BstError {
    #[error("binomial domain error: {0}")]
    Domain(String),
    #[error("label frequencies need at least one unit")]
    EmptyInput,
    #[error("match refers to unknown unit {0:?}")]
    DanglingUnit(String),
    #[error("match refers to unknown descriptor {0:?}")]
    UnknownDescriptor(String),
    #[error("invalid test configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMode {
    /// Every occurrence counts once.
    #[default]
    Occurrences,
    /// A descriptor counts at most once per unit.
    DistinctUnits,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestConfig {
    pub pi0_dismissal: f64,
    pub pi0_approval: f64,
    pub alpha: f64,
    pub min_count: u64,
    #[serde(default)]
    pub count_mode: CountMode,
}

impl TestConfig {
    pub const DEFAULT_ALPHA: f64 = 0.1;
    pub const DEFAULT_MIN_COUNT: u64 = 5;

    /// Null probabilities `(pi0, 1 - pi0)` with default alpha and floor.
    pub fn with_pi0(pi0_dismissal: f64) -> Self {
        TestConfig {
            pi0_dismissal,
            pi0_approval: 1.0 - pi0_dismissal,
            alpha: Self::DEFAULT_ALPHA,
            min_count: Self::DEFAULT_MIN_COUNT,
            count_mode: CountMode::Occurrences,
        }
    }

    pub fn validate(&self) -> Result<(), BstError> {
        for (name, v) in [("pi0_dismissal", self.pi0_dismissal), ("pi0_approval", self.pi0_approval), ("alpha", self.alpha)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(BstError::Config(format!("{name} = {v} must lie in (0, 1)")));
            }
        }
        if self.min_count == 0 {
            return Err(BstError::Config("min_count must be at least 1".into()));
        }
        Ok(())
    }

    pub fn pi0(&self, label: Label) -> f64 {
        match label {
            Label::Dismissal => self.pi0_dismissal,
            Label::Approval => self.pi0_approval,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinomialTestResult {
    pub token: String,
    pub total_count: u64,
    pub count0: u64,
    pub count1: u64,
    pub prob0: f64,
    pub prob1: f64,
    pub p_value0: f64,
    pub p_value1: f64,
    pub biased_toward: Option<Label>,
}

impl BinomialTestResult {
    /// Tests `count0` dismissals and `count1` approvals out of `count0 + count1`.
    pub fn compute(token: &str, count0: u64, count1: u64, config: &TestConfig) -> Result<(Self, Option<Diagnostic>), BstError> {
        let n = count0 + count1;
        let p_value0 = binomial_upper_tail(n, count0, config.pi0_dismissal)?;
        let p_value1 = binomial_upper_tail(n, count1, config.pi0_approval)?;
        let sig0 = p_value0 < config.alpha;
        let sig1 = p_value1 < config.alpha;
        let mut diag = None;
        let biased_toward = match (sig0, sig1) {
            (false, false) => None,
            (true, false) => Some(Label::Dismissal),
            (false, true) => Some(Label::Approval),
            (true, true) => {
                let winner = if p_value1 < p_value0 { Label::Approval } else { Label::Dismissal };
                diag = Some(Diagnostic::warning(
                    "bst.both_significant",
                    format!("{token}: both p-values below alpha ({p_value0:e}, {p_value1:e}); assigned to {winner}"),
                ));
                Some(winner)
            }
        };
        let result = BinomialTestResult {
            token: token.to_string(),
            total_count: n,
            count0,
            count1,
            prob0: count0 as f64 / n as f64,
            prob1: count1 as f64 / n as f64,
            p_value0,
            p_value1,
            biased_toward,
        };
        Ok((result, diag))
    }

    pub fn p_value(&self, label: Label) -> f64 {
        match label {
            Label::Dismissal => self.p_value0,
            Label::Approval => self.p_value1,
        }
    }
}

/// Relative label frequencies `(share of dismissals, share of approvals)`.
pub fn label_frequencies<I: IntoIterator<Item = Label>>(labels: I) -> Result<(f64, f64), BstError> {
    let mut counts = [0u64; 2];
    for l in labels {
        counts[l.index()] += 1;
    }
    let total = counts[0] + counts[1];
    if total == 0 {
        return Err(BstError::EmptyInput);
    }
    Ok((counts[0] as f64 / total as f64, counts[1] as f64 / total as f64))
}

#[derive(Debug, Clone, Default)]
pub struct BstOutput {
    pub results: Vec<BinomialTestResult>,
    pub diagnostics: Vec<Diagnostic>,
    /// Descriptors seen fewer than `min_count` times.
    pub below_min_count: usize,
}

/// Runs both one-sided tests for every descriptor surface with enough occurrences.
///
/// `unit_labels` maps each unit id to its label. Results are ordered by total
/// count descending, then token ascending.
pub fn run_bst(
    matches: &[DescriptorMatch],
    unit_labels: &HashMap<String, Label>,
    lexicon: &Lexicon,
    config: &TestConfig,
) -> Result<BstOutput, BstError> {
    config.validate()?;
    let mut tallies: BTreeMap<&str, [u64; 2]> = BTreeMap::new();
    let mut seen: HashSet<(&str, &str)> = HashSet::new();
    for m in matches {
        let label = *unit_labels.get(&m.unit_id).ok_or_else(|| BstError::DanglingUnit(m.unit_id.clone()))?;
        let surface = lexicon
            .get(&m.descriptor_id)
            .map(|d| d.surface.as_str())
            .ok_or_else(|| BstError::UnknownDescriptor(m.descriptor_id.clone()))?;
        if config.count_mode == CountMode::DistinctUnits && !seen.insert((surface, m.unit_id.as_str())) {
            continue;
        }
        tallies.entry(surface).or_default()[label.index()] += 1;
    }

    let mut out = BstOutput::default();
    for (token, [k0, k1]) in tallies {
        if k0 + k1 < config.min_count {
            out.below_min_count += 1;
            continue;
        }
        let (r, diag) = BinomialTestResult::compute(token, k0, k1, config)?;
        out.results.push(r);
        out.diagnostics.extend(diag);
    }
    out.results.sort_by(|a, b| b.total_count.cmp(&a.total_count).then_with(|| a.token.cmp(&b.token)));
    Ok(out)
}
