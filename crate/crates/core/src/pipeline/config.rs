use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::attribution::{ConsistencyConfig, RecordFilter};
use crate::bst::{CountMode, TestConfig};
use crate::eval::TieBreak;
use crate::lexicon::MatchOptions;
use crate::preprocess::TokenCounterConfig;
use crate::summarizer::SummarizerConfig;
use crate::types::{Language, Split};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrepMode {
    Summarize,
    Chunk,
    #[default]
    Both,
}

impl PrepMode {
    pub fn strategies(self) -> &'static [Strategy] {
        match self {
            PrepMode::Summarize => &[Strategy::Summarize],
            PrepMode::Chunk => &[Strategy::Chunk],
            PrepMode::Both => &[Strategy::Summarize, Strategy::Chunk],
        }
    }
}

/// Which prepared units a stage reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Summarize,
    #[default]
    Chunk,
}

impl Strategy {
    pub fn units_file(self) -> &'static str {
        match self {
            Strategy::Summarize => "units.summary.jsonl",
            Strategy::Chunk => "units.chunk.jsonl",
        }
    }

    pub fn default_topk(self) -> &'static [usize] {
        match self {
            Strategy::Summarize => &[20, 50, 100],
            Strategy::Chunk => &[10, 20, 30],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalyzeConfig {
    pub source: Strategy,
    pub splits: Vec<Split>,
    /// Null probability of dismissal; estimated from the selected documents when absent.
    pub pi0_dismissal: Option<f64>,
    pub alpha: f64,
    pub min_count: u64,
    pub count_mode: CountMode,
    pub dispreferred_only: bool,
    pub matching: MatchOptions,
}

impl Default for AnalyzeConfig {
    fn default() -> Self {
        AnalyzeConfig {
            source: Strategy::Chunk,
            splits: vec![Split::Train],
            pi0_dismissal: None,
            alpha: TestConfig::DEFAULT_ALPHA,
            min_count: TestConfig::DEFAULT_MIN_COUNT,
            count_mode: CountMode::Occurrences,
            dispreferred_only: true,
            matching: MatchOptions::default(),
        }
    }
}

impl AnalyzeConfig {
    pub fn test_config(&self, pi0_dismissal: f64) -> TestConfig {
        TestConfig { alpha: self.alpha, min_count: self.min_count, count_mode: self.count_mode, ..TestConfig::with_pi0(pi0_dismissal) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluateConfig {
    pub source: Strategy,
    pub splits: Vec<Split>,
    pub predictions: Option<PathBuf>,
    pub tie_break: TieBreak,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        EvaluateConfig { source: Strategy::Chunk, splits: vec![Split::Test], predictions: None, tie_break: TieBreak::MajorityClass }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct AttributionConfig {
    pub attributions: Option<PathBuf>,
    pub source: Strategy,
    /// Defaults to the strategy's usual cutoffs.
    pub ks: Option<Vec<usize>>,
    pub consistency: ConsistencyConfig,
    pub filter: RecordFilter,
}

impl AttributionConfig {
    pub fn ks(&self) -> Vec<usize> {
        self.ks.clone().unwrap_or_else(|| self.source.default_topk().to_vec())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub derivations: Option<PathBuf>,
    /// Corpus languages to keep; empty keeps all.
    pub languages: Vec<Language>,
    pub mode: PrepMode,
    pub counter: TokenCounterConfig,
    pub summarizer: SummarizerConfig,
    pub analyze: AnalyzeConfig,
    pub evaluate: EvaluateConfig,
    pub attribution: AttributionConfig,
    pub output_dir: PathBuf,
    /// Recorded in manifests; no stage currently draws random numbers.
    pub seed: Option<u64>,
    pub parallel: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus: None,
            lexicon: None,
            derivations: None,
            languages: Vec::new(),
            mode: PrepMode::Both,
            counter: TokenCounterConfig::default(),
            summarizer: SummarizerConfig::default(),
            analyze: AnalyzeConfig::default(),
            evaluate: EvaluateConfig::default(),
            attribution: AttributionConfig::default(),
            output_dir: PathBuf::from("out"),
            seed: None,
            parallel: true,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|e| PipelineError::from_io(path, e))?;
        serde_json::from_str(&text).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))
    }

    /// Resolves relative paths against `base` (normally the config file's directory).
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            self.corpus.as_mut(),
            self.lexicon.as_mut(),
            self.derivations.as_mut(),
            self.counter.external_counts.as_mut(),
            self.evaluate.predictions.as_mut(),
            self.attribution.attributions.as_mut(),
        ]
        .into_iter()
        .flatten()
        {
            fix(p);
        }
        fix(&mut self.output_dir);
    }

    pub fn units_path(&self, strategy: Strategy) -> PathBuf {
        self.output_dir.join(strategy.units_file())
    }

    pub fn require<'a>(&self, field: &'a Option<PathBuf>, name: &str) -> Result<&'a Path, PipelineError> {
        field.as_deref().ok_or_else(|| PipelineError::Config(format!("no {name} path configured")))
    }
}
