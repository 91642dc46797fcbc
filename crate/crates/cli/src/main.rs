mod translate;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use biasaudit::attribution::RecordFilter;
use biasaudit::diagnostics::Diagnostic;
use biasaudit::lexicon::translate::TranslationProvider;
use biasaudit::pipeline::{self, PipelineError, PrepMode, RunConfig, StageReport, Strategy};
use biasaudit::preprocess::{CounterMode, Ratio};
use biasaudit::eval::TieBreak;
use biasaudit::bst::CountMode;
use biasaudit::{Label, Language, Split};
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;

/// Parses a value through the type's JSON string representation, so CLI
/// spellings match the config file.
fn json_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_string())).map_err(|e| e.to_string())
}

fn label_arg(s: &str) -> Result<Label, String> {
    s.parse::<u8>().ok().and_then(Label::from_u8).ok_or_else(|| format!("label must be 0 or 1, got {s:?}"))
}

#[derive(Parser)]
#[command(name = "biasaudit", version, about = "Descriptor bias audit for labeled judgment corpora")]
struct Cli {
    /// JSON run configuration; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    #[arg(long, global = true)]
    lexicon: Option<PathBuf>,
    #[arg(long, global = true)]
    derivations: Option<PathBuf>,
    #[arg(long = "output-dir", global = true)]
    output_dir: Option<PathBuf>,
    /// Restrict the corpus to these languages (repeatable).
    #[arg(long = "language", global = true)]
    languages: Vec<Language>,
    /// Process documents sequentially.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Lexicon maintenance.
    #[command(subcommand)]
    Lexicon(LexiconCommand),
    /// Build summary and/or chunk units from the corpus.
    Prepare(PrepareArgs),
    /// Descriptor matching and binomial significance tests.
    Analyze(AnalyzeArgs),
    /// Aggregate unit predictions and score them.
    Evaluate(EvaluateArgs),
    /// Top-k membership and sign consistency of word attributions.
    Attribution(AttributionArgs),
    /// prepare + analyze, then evaluate/attribution when configured.
    All(PrepareArgs),
}

#[derive(Subcommand)]
enum LexiconCommand {
    /// Load and check a lexicon; prints its statistics as JSON.
    Validate {
        path: PathBuf,
        #[arg(long)]
        with_derivations: Option<PathBuf>,
    },
    /// Add derived forms and write the extended lexicon.
    Derive {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long = "forms")]
        forms: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Translate dispreferred originals; cache hits never reach the network.
    Translate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "de,fr,it")]
        targets: Vec<Language>,
        #[arg(long)]
        cache: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// HTTPS endpoint; without it only cached translations are used.
        #[arg(long)]
        endpoint: Option<String>,
    },
}

#[derive(Args, Default)]
struct PrepareArgs {
    #[arg(long, value_parser = json_enum::<PrepMode>)]
    mode: Option<PrepMode>,
    #[arg(long = "counter", value_parser = json_enum::<CounterMode>)]
    counter_mode: Option<CounterMode>,
    /// Tokens per word for words_times_factor, e.g. 128/75.
    #[arg(long, value_parser = json_enum::<Ratio>)]
    factor: Option<Ratio>,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long = "chunk-words")]
    chunk_words: Option<usize>,
    #[arg(long = "external-counts")]
    external_counts: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long, value_parser = json_enum::<Strategy>)]
    source: Option<Strategy>,
    /// Null dismissal probability; estimated from the corpus when omitted.
    #[arg(long)]
    pi0: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long = "min-count")]
    min_count: Option<u64>,
    #[arg(long = "split", value_parser = json_enum::<Split>)]
    splits: Vec<Split>,
    #[arg(long = "count-mode", value_parser = json_enum::<CountMode>)]
    count_mode: Option<CountMode>,
    #[arg(long = "case-insensitive")]
    case_insensitive: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    predictions: Option<PathBuf>,
    #[arg(long, value_parser = json_enum::<Strategy>)]
    source: Option<Strategy>,
    #[arg(long = "split", value_parser = json_enum::<Split>)]
    splits: Vec<Split>,
    #[arg(long = "tie-break", value_parser = json_enum::<TieBreak>)]
    tie_break: Option<TieBreak>,
}

#[derive(Args)]
struct AttributionArgs {
    #[arg(long)]
    attributions: Option<PathBuf>,
    #[arg(long, value_parser = json_enum::<Strategy>)]
    source: Option<Strategy>,
    /// Top-k cutoffs (repeatable or comma-separated).
    #[arg(long = "k", value_delimiter = ',')]
    ks: Vec<usize>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long = "min-occurrences")]
    min_occurrences: Option<u64>,
    #[arg(long, value_parser = label_arg)]
    predicted: Option<Label>,
    #[arg(long = "true-label", value_parser = label_arg)]
    true_label: Option<Label>,
    #[arg(long = "misclassified-only")]
    misclassified_only: bool,
}

fn emit(diags: &[Diagnostic]) {
    for d in diags {
        eprintln!("{}", d.to_json_line());
    }
}

fn build_config(cli: &Cli) -> Result<RunConfig, PipelineError> {
    let mut config = match &cli.config {
        Some(p) => {
            let mut c = RunConfig::load(p)?;
            c.resolve_paths(p.parent().unwrap_or(Path::new(".")));
            c
        }
        None => RunConfig::default(),
    };
    if let Some(p) = &cli.corpus {
        config.corpus = Some(p.clone());
    }
    if let Some(p) = &cli.lexicon {
        config.lexicon = Some(p.clone());
    }
    if let Some(p) = &cli.derivations {
        config.derivations = Some(p.clone());
    }
    if let Some(p) = &cli.output_dir {
        config.output_dir = p.clone();
    }
    if !cli.languages.is_empty() {
        config.languages = cli.languages.clone();
    }
    if cli.sequential {
        config.parallel = false;
    }
    Ok(config)
}

fn apply_prepare(config: &mut RunConfig, a: &PrepareArgs) {
    if let Some(m) = a.mode {
        config.mode = m;
    }
    let c = &mut config.counter;
    if let Some(m) = a.counter_mode {
        c.mode = m;
    }
    if let Some(f) = a.factor {
        c.factor = f;
    }
    if let Some(b) = a.budget {
        c.budget = b;
        config.summarizer.summary.budget_tokens = b;
    }
    if let Some(w) = a.chunk_words {
        c.chunk_word_limit = w;
    }
    if let Some(p) = &a.external_counts {
        c.external_counts = Some(p.clone());
    }
}

fn apply_analyze(config: &mut RunConfig, a: &AnalyzeArgs) {
    let c = &mut config.analyze;
    if let Some(s) = a.source {
        c.source = s;
    }
    if a.pi0.is_some() {
        c.pi0_dismissal = a.pi0;
    }
    if let Some(x) = a.alpha {
        c.alpha = x;
    }
    if let Some(x) = a.min_count {
        c.min_count = x;
    }
    if !a.splits.is_empty() {
        c.splits = a.splits.clone();
    }
    if let Some(m) = a.count_mode {
        c.count_mode = m;
    }
    if a.case_insensitive {
        c.matching.case_sensitive = false;
    }
}

fn report(r: StageReport) {
    for p in &r.artifacts {
        println!("{}", p.display());
    }
    emit(&r.diagnostics);
}

fn run(cli: Cli) -> Result<(), PipelineError> {
    let mut config = build_config(&cli)?;
    match cli.command {
        Command::Lexicon(cmd) => run_lexicon(cmd)?,
        Command::Prepare(a) => {
            apply_prepare(&mut config, &a);
            report(pipeline::cmd_prepare(&config)?);
        }
        Command::Analyze(a) => {
            apply_analyze(&mut config, &a);
            report(pipeline::cmd_analyze(&config)?);
        }
        Command::Evaluate(a) => {
            let c = &mut config.evaluate;
            if let Some(s) = a.source {
                c.source = s;
            }
            if !a.splits.is_empty() {
                c.splits = a.splits;
            }
            if let Some(t) = a.tie_break {
                c.tie_break = t;
            }
            report(pipeline::cmd_evaluate(&config, a.predictions.as_deref())?);
        }
        Command::Attribution(a) => {
            let c = &mut config.attribution;
            if let Some(s) = a.source {
                c.source = s;
            }
            if let Some(t) = a.threshold {
                c.consistency.threshold = t;
            }
            if let Some(m) = a.min_occurrences {
                c.consistency.min_occurrences = m;
            }
            if a.predicted.is_some() || a.true_label.is_some() || a.misclassified_only {
                c.filter = RecordFilter { predicted: a.predicted, true_label: a.true_label, misclassified_only: a.misclassified_only };
            }
            let ks = (!a.ks.is_empty()).then_some(a.ks.as_slice());
            report(pipeline::cmd_attribution(&config, a.attributions.as_deref(), ks)?);
        }
        Command::All(a) => {
            apply_prepare(&mut config, &a);
            report(pipeline::cmd_all(&config)?);
        }
    }
    Ok(())
}

fn run_lexicon(cmd: LexiconCommand) -> Result<(), PipelineError> {
    match cmd {
        LexiconCommand::Validate { path, with_derivations } => {
            let (stats, diags) = pipeline::lexicon_validate(&path, with_derivations.as_deref())?;
            println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
            emit(&diags);
        }
        LexiconCommand::Derive { input, forms, out } => {
            let stats = pipeline::lexicon_derive(&input, &forms, &out)?;
            println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
        }
        LexiconCommand::Translate { input, targets, cache, out, endpoint } => {
            let http = match &endpoint {
                Some(url) => Some(translate::HttpTranslator::from_env(url).map_err(PipelineError::Config)?),
                None => None,
            };
            let provider = http.as_ref().map(|h| h as &dyn TranslationProvider);
            let (stats, diags) = pipeline::lexicon_translate(&input, &targets, provider, &cache, &out)?;
            println!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
            emit(&diags);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            emit(&[e.to_diagnostic()]);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
