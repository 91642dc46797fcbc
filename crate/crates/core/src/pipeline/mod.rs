//! Stage orchestration: prepare, analyze, evaluate, attribution and lexicon maintenance.
//!
//! Every stage writes its artifacts into the configured output directory
//! together with a `manifest.<stage>.json` listing input and output digests.
//! Artifacts are byte-identical across runs with the same inputs; only the
//! manifest's `created_at` field varies.

mod config;
mod manifest;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

pub use config::{AnalyzeConfig, AttributionConfig, EvaluateConfig, PrepMode, RunConfig, Strategy};
pub use manifest::{FileDigest, RunManifest};
use manifest::Stage;

use crate::attribution::{
    consistency_csv, consistency_report, load_attributions, topk_csv, topk_membership, AttributionError,
};
use crate::bst::{biased_json, bst_csv, label_frequencies, run_bst, scatter_csv, BstError};
use crate::diagnostics::Diagnostic;
use crate::eval::{
    aggregate_votes, check_coverage, classification_report, descriptor_performance_csv, per_descriptor_performance,
    EvalError, PredictionRecord,
};
use crate::io::{read_jsonl, IoError};
use crate::lexicon::translate::{translate_lexicon, TranslateError, TranslationCache, TranslationProvider};
use crate::lexicon::{load_derivations, load_lexicon, DescriptorMatch, DescriptorMatcher, Lexicon, LexiconError, LexiconStats};
use crate::preprocess::{chunk_corpus, load_corpus, sort_units, AnalysisUnit, Document, PreprocessError, TokenCounter};
use crate::summarizer::{summarize_document, SummarizerError};
use crate::types::{Label, Language};

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("{0}: input not found")]
    Missing(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error(transparent)]
    File(#[from] IoError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Summarizer(#[from] SummarizerError),
    #[error(transparent)]
    Bst(#[from] BstError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Attribution(#[from] AttributionError),
    #[error(transparent)]
    Translate(#[from] TranslateError),
}

fn io_missing(e: &IoError) -> bool {
    matches!(e, IoError::Missing { .. })
}

fn not_found(e: &std::io::Error) -> bool {
    e.kind() == std::io::ErrorKind::NotFound
}

impl PipelineError {
    pub(crate) fn from_io(path: &Path, source: std::io::Error) -> Self {
        if not_found(&source) {
            PipelineError::Missing(path.display().to_string())
        } else {
            PipelineError::Io { path: path.display().to_string(), source }
        }
    }

    /// 2 when an input file is missing, 1 for every other failure.
    pub fn exit_code(&self) -> i32 {
        let missing = match self {
            PipelineError::Missing(_) => true,
            PipelineError::File(e) => io_missing(e),
            PipelineError::Lexicon(LexiconError::Io { source, .. }) => not_found(source),
            PipelineError::Preprocess(PreprocessError::Io(e)) => io_missing(e),
            PipelineError::Summarizer(SummarizerError::Preprocess(PreprocessError::Io(e))) => io_missing(e),
            PipelineError::Attribution(AttributionError::Io(e)) => io_missing(e),
            PipelineError::Translate(TranslateError::Io { source, .. }) => not_found(source),
            PipelineError::Translate(TranslateError::Lexicon(LexiconError::Io { source, .. })) => not_found(source),
            _ => false,
        };
        if missing {
            2
        } else {
            1
        }
    }

    pub fn to_diagnostic(&self) -> Diagnostic {
        let code = match self.exit_code() {
            2 => "input.missing",
            _ => "validation",
        };
        Diagnostic::error(code, self.to_string())
    }
}

/// What a stage produced.
#[derive(Debug, Default)]
pub struct StageReport {
    pub artifacts: Vec<PathBuf>,
    pub diagnostics: Vec<Diagnostic>,
}

fn require_file(path: &Path) -> Result<(), PipelineError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(PipelineError::Missing(path.display().to_string()))
    }
}

/// Corpus restricted to the configured languages, sorted by id.
pub fn load_documents(config: &RunConfig) -> Result<Vec<Document>, PipelineError> {
    let path = config.require(&config.corpus, "corpus")?;
    require_file(path)?;
    let mut docs = load_corpus(path)?;
    if !config.languages.is_empty() {
        docs.retain(|d| config.languages.contains(&d.language));
    }
    docs.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(docs)
}

/// The configured lexicon with derived forms applied.
pub fn load_run_lexicon(config: &RunConfig) -> Result<Lexicon, PipelineError> {
    let path = config.require(&config.lexicon, "lexicon")?;
    require_file(path)?;
    let lexicon = load_lexicon(path)?;
    match &config.derivations {
        Some(d) => {
            require_file(d)?;
            Ok(lexicon.add_derived_forms(&load_derivations(d)?)?)
        }
        None => Ok(lexicon),
    }
}

fn record_lexicon_inputs(stage: &mut Stage<'_>, config: &RunConfig) -> Result<(), PipelineError> {
    if let Some(p) = &config.lexicon {
        stage.input("lexicon", p)?;
    }
    if let Some(p) = &config.derivations {
        stage.input("derivations", p)?;
    }
    Ok(())
}

fn load_units(config: &RunConfig, strategy: crate::pipeline::Strategy) -> Result<Vec<AnalysisUnit>, PipelineError> {
    let path = config.units_path(strategy);
    require_file(&path)?;
    Ok(read_jsonl(&path)?)
}

pub fn cmd_prepare(config: &RunConfig) -> Result<StageReport, PipelineError> {
    let docs = load_documents(config)?;
    let counter = TokenCounter::new(config.counter.clone())?;
    let mut stage = Stage::new("prepare", config)?;
    stage.input("corpus", config.corpus.as_deref().expect("checked by load_documents"))?;
    if let Some(p) = &config.counter.external_counts {
        stage.input("external_counts", p)?;
    }
    stage.count("documents", docs.len());
    stage.count("counter_mode", config.counter.mode.name());
    let mut diagnostics = Vec::new();

    for &strategy in config.mode.strategies() {
        match strategy {
            Strategy::Chunk => {
                let (units, stats) = chunk_corpus(&docs, &counter, config.parallel)?;
                if stats.overflowing_chunks > 0 {
                    diagnostics.push(Diagnostic::warning(
                        "prepare.chunk_overflow",
                        format!("{} chunk(s) exceed the {}-token budget", stats.overflowing_chunks, config.counter.budget),
                    ));
                }
                stage.count("chunk", &stats);
                stage.write_jsonl(strategy.units_file(), &units)?;
            }
            Strategy::Summarize => {
                let summarize = |d: &Document| summarize_document(d, &counter, &config.summarizer);
                let results: Vec<_> = if config.parallel {
                    docs.par_iter().map(summarize).collect::<Result<_, _>>()?
                } else {
                    docs.iter().map(summarize).collect::<Result<_, _>>()?
                };
                let overflowing: Vec<&str> =
                    results.iter().filter(|(_, s)| s.overflowing).map(|(u, _)| u.doc_id.as_str()).collect();
                for doc in &overflowing {
                    diagnostics.push(Diagnostic::warning(
                        "prepare.summary_overflow",
                        format!("document {doc:?}: single remaining sentence exceeds the token budget"),
                    ));
                }
                #[derive(Serialize)]
                struct SummaryStats {
                    documents: usize,
                    overflowing: usize,
                    sentences_selected: usize,
                    sentences_available: usize,
                }
                stage.count(
                    "summary",
                    SummaryStats {
                        documents: results.len(),
                        overflowing: overflowing.len(),
                        sentences_selected: results.iter().map(|(_, s)| s.selected.len()).sum(),
                        sentences_available: results.iter().map(|(_, s)| s.available).sum(),
                    },
                );
                let mut units: Vec<AnalysisUnit> = results.into_iter().map(|(u, _)| u).collect();
                sort_units(&mut units);
                stage.write_jsonl(strategy.units_file(), &units)?;
            }
        }
    }
    Ok(StageReport { artifacts: stage.finish()?, diagnostics })
}

/// Doc id -> document for every corpus document.
fn doc_index(docs: &[Document]) -> HashMap<&str, &Document> {
    docs.iter().map(|d| (d.id.as_str(), d)).collect()
}

/// Matches descriptors of each unit's document language. Units whose
/// document is absent from the corpus are an error.
fn match_units(
    units: &[&AnalysisUnit],
    docs: &HashMap<&str, &Document>,
    lexicon: &Lexicon,
    options: crate::lexicon::MatchOptions,
    parallel: bool,
) -> Result<Vec<DescriptorMatch>, PipelineError> {
    let matchers: BTreeMap<Language, DescriptorMatcher<'_>> =
        lexicon.languages().into_iter().map(|l| (l, DescriptorMatcher::for_language(lexicon, l, options))).collect();
    let one = |u: &&AnalysisUnit| -> Result<Vec<DescriptorMatch>, PipelineError> {
        let doc = docs
            .get(u.doc_id.as_str())
            .ok_or_else(|| PipelineError::Data(format!("unit {:?} belongs to unknown document {:?}", u.unit_id, u.doc_id)))?;
        Ok(matchers.get(&doc.language).map(|m| m.find(&u.unit_id, &u.text)).unwrap_or_default())
    };
    let per_unit: Vec<Vec<DescriptorMatch>> = if parallel {
        units.par_iter().map(one).collect::<Result<_, _>>()?
    } else {
        units.iter().map(one).collect::<Result<_, _>>()?
    };
    Ok(per_unit.into_iter().flatten().collect())
}

pub fn cmd_analyze(config: &RunConfig) -> Result<StageReport, PipelineError> {
    let ac = &config.analyze;
    let docs = load_documents(config)?;
    let mut lexicon = load_run_lexicon(config)?;
    if ac.dispreferred_only {
        lexicon = lexicon.dispreferred();
    }
    let units = load_units(config, ac.source)?;
    let index = doc_index(&docs);
    let selected: Vec<&AnalysisUnit> = units
        .iter()
        .filter(|u| index.get(u.doc_id.as_str()).is_some_and(|d| ac.splits.contains(&d.split)))
        .collect();
    let selected_docs: Vec<&Document> = docs.iter().filter(|d| ac.splits.contains(&d.split)).collect();

    let pi0 = match ac.pi0_dismissal {
        Some(p) => p,
        None => label_frequencies(selected_docs.iter().map(|d| d.label))?.0,
    };
    let test = ac.test_config(pi0);
    test.validate()?;

    let matches = match_units(&selected, &index, &lexicon, ac.matching, config.parallel)?;
    let labels: HashMap<String, Label> = selected.iter().map(|u| (u.unit_id.clone(), u.label)).collect();
    let out = run_bst(&matches, &labels, &lexicon, &test)?;

    let mut stage = Stage::new("analyze", config)?;
    stage.input("corpus", config.corpus.as_deref().expect("checked by load_documents"))?;
    record_lexicon_inputs(&mut stage, config)?;
    stage.input("units", &config.units_path(ac.source))?;
    stage.count("units", selected.len());
    stage.count("documents", selected_docs.len());
    stage.count("pi0_dismissal", pi0);
    stage.count("matches", matches.len());
    stage.count("descriptors_tested", out.results.len());
    stage.count("descriptors_below_min_count", out.below_min_count);
    stage.write("bst.csv", bst_csv(&out.results).as_bytes())?;
    stage.write_json("biased.json", &biased_json(&out.results))?;
    stage.write("scatter.dismissal.csv", scatter_csv(&out.results, Label::Dismissal).as_bytes())?;
    stage.write("scatter.approval.csv", scatter_csv(&out.results, Label::Approval).as_bytes())?;
    stage.write_jsonl("matches.jsonl", &matches)?;
    Ok(StageReport { artifacts: stage.finish()?, diagnostics: out.diagnostics })
}

pub fn cmd_evaluate(config: &RunConfig, predictions: Option<&Path>) -> Result<StageReport, PipelineError> {
    let ec = &config.evaluate;
    let pred_path = match predictions {
        Some(p) => p,
        None => config.require(&ec.predictions, "predictions")?,
    };
    require_file(pred_path)?;
    let docs = load_documents(config)?;
    let index = doc_index(&docs);
    let units = load_units(config, ec.source)?;
    let expected: Vec<&AnalysisUnit> = units
        .iter()
        .filter(|u| index.get(u.doc_id.as_str()).is_some_and(|d| ec.splits.contains(&d.split)))
        .collect();
    let predictions: Vec<PredictionRecord> = read_jsonl(pred_path)?;
    check_coverage(expected.iter().map(|u| u.unit_id.as_str()), &predictions)?;

    let mut diagnostics = Vec::new();
    let wanted: HashSet<&str> = expected.iter().map(|u| u.unit_id.as_str()).collect();
    let (kept, extra): (Vec<PredictionRecord>, Vec<PredictionRecord>) =
        predictions.into_iter().partition(|p| wanted.contains(p.unit_id.as_str()));
    if !extra.is_empty() {
        diagnostics.push(Diagnostic::info(
            "evaluate.extra_predictions",
            format!("{} prediction(s) for units outside the evaluated splits were ignored", extra.len()),
        ));
    }
    let mut seen = HashSet::new();
    if let Some(dup) = kept.iter().find(|p| !seen.insert(p.unit_id.as_str())) {
        return Err(PipelineError::Data(format!("duplicate prediction for unit {:?}", dup.unit_id)));
    }

    let verdicts = aggregate_votes(&kept, ec.tie_break)?;
    let truths: HashMap<String, Label> =
        verdicts.iter().map(|v| (v.unit_id.clone(), index[v.unit_id.as_str()].label)).collect();
    let pairs: Vec<(Label, Label)> = verdicts.iter().map(|v| (v.predicted, truths[&v.unit_id])).collect();
    let report = classification_report(&pairs)?;
    diagnostics.extend(report.diagnostics.iter().cloned());

    let mut stage = Stage::new("evaluate", config)?;
    stage.input("corpus", config.corpus.as_deref().expect("checked by load_documents"))?;
    stage.input("units", &config.units_path(ec.source))?;
    stage.input("predictions", pred_path)?;
    stage.count("units", expected.len());
    stage.count("documents", verdicts.len());
    stage.write_jsonl("verdicts.jsonl", &verdicts)?;
    stage.write_json("metrics.json", &report)?;
    stage.write("metrics.txt", report.render_table(&format!("{:?}", ec.source).to_lowercase()).as_bytes())?;

    if config.lexicon.is_some() {
        record_lexicon_inputs(&mut stage, config)?;
        let lexicon = load_run_lexicon(config)?.dispreferred();
        let matches = match_units(&expected, &index, &lexicon, config.analyze.matching, config.parallel)?;
        let rows = per_descriptor_performance(&verdicts, &truths, &matches, &lexicon, None)?;
        stage.write("descriptor_performance.csv", descriptor_performance_csv(&rows).as_bytes())?;
    } else {
        diagnostics.push(Diagnostic::info("evaluate.no_lexicon", "no lexicon configured; per-descriptor table skipped"));
    }
    Ok(StageReport { artifacts: stage.finish()?, diagnostics })
}

pub fn cmd_attribution(config: &RunConfig, attributions: Option<&Path>, ks: Option<&[usize]>) -> Result<StageReport, PipelineError> {
    let atc = &config.attribution;
    let path = match attributions {
        Some(p) => p,
        None => config.require(&atc.attributions, "attributions")?,
    };
    require_file(path)?;
    let ks: Vec<usize> = ks.map(<[usize]>::to_vec).unwrap_or_else(|| atc.ks());
    if ks.contains(&0) {
        return Err(PipelineError::Config("k must be positive".into()));
    }
    let lexicon = load_run_lexicon(config)?.dispreferred();
    let languages: Vec<Language> =
        if config.languages.is_empty() { lexicon.languages() } else { config.languages.clone() };
    let matcher = DescriptorMatcher::new(&lexicon, &languages, config.analyze.matching);
    let records: Vec<_> = load_attributions(path)?.into_iter().filter(|r| atc.filter.accepts(r)).collect();

    let topk = topk_membership(&records, &matcher, &ks)?;
    let consistency = consistency_report(&records, &matcher, &atc.consistency)?;

    let mut stage = Stage::new("attribution", config)?;
    record_lexicon_inputs(&mut stage, config)?;
    stage.input("attributions", path)?;
    stage.count("records", records.len());
    stage.count("ks", &ks);
    stage.count("flagged", consistency.iter().filter(|c| c.flagged).count());
    stage.write("topk.csv", topk_csv(&topk).as_bytes())?;
    stage.write_json("topk.json", &topk)?;
    stage.write("consistency.csv", consistency_csv(&consistency).as_bytes())?;
    stage.write_json("consistency.json", &consistency)?;
    Ok(StageReport { artifacts: stage.finish()?, diagnostics: Vec::new() })
}

/// Runs prepare and analyze, then evaluate and attribution when their inputs are configured.
pub fn cmd_all(config: &RunConfig) -> Result<StageReport, PipelineError> {
    let mut total = cmd_prepare(config)?;
    let mut absorb = |r: StageReport| {
        total.artifacts.extend(r.artifacts);
        total.diagnostics.extend(r.diagnostics);
    };
    absorb(cmd_analyze(config)?);
    if config.evaluate.predictions.is_some() {
        absorb(cmd_evaluate(config, None)?);
    }
    if config.attribution.attributions.is_some() {
        absorb(cmd_attribution(config, None, None)?);
    }
    Ok(total)
}

/// Loads a lexicon file, returning its statistics plus informational notes.
pub fn lexicon_validate(path: &Path, derivations: Option<&Path>) -> Result<(LexiconStats, Vec<Diagnostic>), PipelineError> {
    require_file(path)?;
    let mut lexicon = load_lexicon(path)?;
    if let Some(d) = derivations {
        require_file(d)?;
        lexicon = lexicon.add_derived_forms(&load_derivations(d)?)?;
    }
    let stats = lexicon.stats();
    let diags = vec![Diagnostic::info(
        "lexicon.stats",
        format!(
            "version {}: {} entries, {} original, {} original dispreferred",
            lexicon.version(),
            stats.total,
            stats.original,
            stats.original_dispreferred
        ),
    )];
    Ok((stats, diags))
}

/// Applies a derivations file and writes the extended lexicon to `out`.
pub fn lexicon_derive(lexicon: &Path, derivations: &Path, out: &Path) -> Result<LexiconStats, PipelineError> {
    require_file(lexicon)?;
    require_file(derivations)?;
    let extended = load_lexicon(lexicon)?.add_derived_forms(&load_derivations(derivations)?)?;
    extended.save(out)?;
    Ok(extended.stats())
}

/// Translates dispreferred originals into `targets` through the cache (and
/// `provider` on a miss) and writes the extended lexicon to `out`.
pub fn lexicon_translate(
    lexicon: &Path,
    targets: &[Language],
    provider: Option<&dyn TranslationProvider>,
    cache: &Path,
    out: &Path,
) -> Result<(LexiconStats, Vec<Diagnostic>), PipelineError> {
    require_file(lexicon)?;
    let base = load_lexicon(lexicon)?;
    let mut cache = TranslationCache::open(cache)?;
    let outcome = translate_lexicon(&base, targets, provider, &mut cache)?;
    outcome.lexicon.save(out)?;
    let mut diags = vec![Diagnostic::info(
        "lexicon.translate",
        format!("{} entries added, {} provider call(s)", outcome.added, outcome.provider_calls),
    )];
    for c in &outcome.collisions {
        diags.push(Diagnostic::warning(
            "lexicon.translation_collision",
            format!(
                "translation of {:?} into {} is {:?}, already held by {:?}; skipped",
                c.base_id, c.language, c.surface, c.existing_id
            ),
        ));
    }
    Ok((outcome.lexicon.stats(), diags))
}
