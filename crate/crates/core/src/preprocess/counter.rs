use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::PreprocessError;
use crate::io::{read_jsonl, IoError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CounterMode {
    #[default]
    WhitespaceWords,
    WordsTimesFactor,
    ExternalCounts,
}

impl CounterMode {
    pub fn name(self) -> &'static str {
        match self {
            CounterMode::WhitespaceWords => "whitespace_words",
            CounterMode::WordsTimesFactor => "words_times_factor",
            CounterMode::ExternalCounts => "external_counts",
        }
    }
}

/// Positive rational, serialized as `"num/den"`; plain JSON numbers are accepted on input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ratio {
    num: u64,
    den: u64,
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Option<Self> {
        if num == 0 || den == 0 {
            return None;
        }
        let g = gcd(num, den);
        Some(Ratio { num: num / g, den: den / g })
    }

    pub fn num(self) -> u64 {
        self.num
    }

    pub fn den(self) -> u64 {
        self.den
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `ceil(n * self)` in exact integer arithmetic.
    pub fn mul_ceil(self, n: usize) -> usize {
        let n = n as u128;
        ((n * self.num as u128).div_ceil(self.den as u128)) as usize
    }

    fn from_f64(x: f64) -> Option<Self> {
        if !(x.is_finite() && x > 0.0) {
            return None;
        }
        const DEN: u64 = 1_000_000;
        Ratio::new((x * DEN as f64).round() as u64, DEN)
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Ratio {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("invalid positive ratio {s:?}");
        match s.split_once('/') {
            Some((a, b)) => {
                let a = a.trim().parse().map_err(|_| bad())?;
                let b = b.trim().parse().map_err(|_| bad())?;
                Ratio::new(a, b).ok_or_else(bad)
            }
            None => Ratio::from_f64(s.trim().parse().map_err(|_| bad())?).ok_or_else(bad),
        }
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Raw::Number(x) => Ratio::from_f64(x).ok_or_else(|| serde::de::Error::custom("factor must be > 0")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TokenCounterConfig {
    pub mode: CounterMode,
    /// Tokens per word, used only by `words_times_factor`.
    pub factor: Ratio,
    pub budget: usize,
    pub chunk_word_limit: usize,
    /// Precomputed counts for `external_counts`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub external_counts: Option<PathBuf>,
}

impl Default for TokenCounterConfig {
    fn default() -> Self {
        TokenCounterConfig {
            mode: CounterMode::WhitespaceWords,
            factor: Ratio { num: 128, den: 75 },
            budget: 512,
            chunk_word_limit: 300,
            external_counts: None,
        }
    }
}

impl TokenCounterConfig {
    pub fn validate(&self) -> Result<(), PreprocessError> {
        if self.budget < 3 {
            return Err(PreprocessError::Config("budget must leave room for two special tokens".into()));
        }
        if self.chunk_word_limit == 0 {
            return Err(PreprocessError::Config("chunk_word_limit must be positive".into()));
        }
        if self.mode == CounterMode::ExternalCounts && self.external_counts.is_none() {
            return Err(PreprocessError::Config("external_counts mode needs a counts file".into()));
        }
        Ok(())
    }

    /// Largest token count a document may have and still be kept whole:
    /// the budget minus the two special tokens the encoder adds.
    pub fn whole_threshold(&self) -> usize {
        self.budget.saturating_sub(2)
    }
}

pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Counts tokens for the self-contained modes. `external_counts` needs a
/// [`TokenCounter`] with a key and returns an error here.
pub fn count_tokens(text: &str, config: &TokenCounterConfig) -> Result<usize, PreprocessError> {
    let words = word_count(text);
    match config.mode {
        CounterMode::WhitespaceWords => Ok(words),
        CounterMode::WordsTimesFactor => Ok(config.factor.mul_ceil(words)),
        CounterMode::ExternalCounts if words == 0 => Ok(0),
        CounterMode::ExternalCounts => Err(PreprocessError::ExternalMiss { key: String::new() }),
    }
}

#[derive(Debug, Deserialize)]
struct CountRow {
    unit_id: Option<String>,
    doc_id: Option<String>,
    token_count: usize,
}

/// Token counter bound to its configuration and, for `external_counts`, the loaded count table.
#[derive(Debug, Clone)]
pub struct TokenCounter {
    config: TokenCounterConfig,
    external: HashMap<String, usize>,
}

impl TokenCounter {
    pub fn new(config: TokenCounterConfig) -> Result<Self, PreprocessError> {
        config.validate()?;
        let external = match (&config.mode, &config.external_counts) {
            (CounterMode::ExternalCounts, Some(p)) => load_external_counts(p)?,
            _ => HashMap::new(),
        };
        Ok(TokenCounter { config, external })
    }

    pub fn with_table(config: TokenCounterConfig, table: HashMap<String, usize>) -> Self {
        TokenCounter { config, external: table }
    }

    pub fn config(&self) -> &TokenCounterConfig {
        &self.config
    }

    /// Whether the count of arbitrary text can be computed (false for lookup tables).
    pub fn counts_free_text(&self) -> bool {
        self.config.mode != CounterMode::ExternalCounts
    }

    /// Counts `text`; external lookups try each key in order.
    pub fn count(&self, keys: &[&str], text: &str) -> Result<usize, PreprocessError> {
        if self.config.mode != CounterMode::ExternalCounts {
            return count_tokens(text, &self.config);
        }
        if text.trim().is_empty() {
            return Ok(0);
        }
        keys.iter()
            .find_map(|k| self.external.get(*k).copied())
            .ok_or_else(|| PreprocessError::ExternalMiss { key: keys.first().copied().unwrap_or_default().to_string() })
    }
}

pub fn load_external_counts(path: &Path) -> Result<HashMap<String, usize>, PreprocessError> {
    let rows: Vec<CountRow> = read_jsonl(path)?;
    let mut table = HashMap::with_capacity(rows.len());
    for (i, r) in rows.into_iter().enumerate() {
        let key = r.unit_id.or(r.doc_id).ok_or_else(|| {
            PreprocessError::Io(IoError::Schema {
                path: path.display().to_string(),
                line: i + 1,
                message: "row needs \"unit_id\" or \"doc_id\"".into(),
            })
        })?;
        table.insert(key, r.token_count);
    }
    Ok(table)
}
