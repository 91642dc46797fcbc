//! Descriptor bias auditing for labeled legal judgment corpora.
//!
//! The crate covers the full offline audit: a multilingual descriptor
//! lexicon and whole-word matcher, budgeted preprocessing (chunking and
//! extractive summaries), exact binomial testing of label skew, evaluation of
//! exported model predictions and analysis of exported word attributions.

pub mod attribution;
pub mod bst;
pub mod diagnostics;
pub mod eval;
pub mod io;
pub mod lexicon;
pub mod pipeline;
pub mod preprocess;
pub mod summarizer;
pub mod types;

pub use attribution::{AttributionRecord, ConsistencyReport, TopKReport};
pub use bst::{binomial_upper_tail, BinomialTestResult, TestConfig};
pub use diagnostics::Diagnostic;
pub use eval::{MetricsReport, PredictionRecord};
pub use lexicon::{Descriptor, DescriptorMatch, Lexicon};
pub use preprocess::{AnalysisUnit, Document, TokenCounterConfig};
pub use summarizer::{Summary, SummaryConfig};
pub use types::{Label, Language, Split, UnitKind};
