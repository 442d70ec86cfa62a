//! `forge`: corpus construction, dataset transposition, evaluation,
//! significance testing and reporting.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use forge_core::eval::{Setup, Task};
use forge_core::orchestrate::InterchangeKind;
use forge_core::Language;

mod commands;

/// Exit status for inputs that fail schema or invariant checks.
const EXIT_VALIDATION: u8 = 2;
/// Exit status when a required file is absent.
const EXIT_MISSING: u8 = 3;

#[derive(Parser)]
#[command(name = "forge", version, about = "Bilingual pretraining corpora and evaluation tooling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pretraining corpora.
    #[command(subcommand)]
    Corpus(CorpusCommand),
    /// Machine-translated QA datasets.
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// Score predictions against gold data.
    #[command(subcommand)]
    Eval(EvalCommand),
    /// Significance testing.
    #[command(subcommand)]
    Stats(StatsCommand),
    /// Expand an experiment configuration into runs.
    Plan(PlanArgs),
    /// Update or inspect the run registry.
    #[command(subcommand)]
    Registry(RegistryCommand),
    /// Check interchange files against their schema.
    Validate(ValidateArgs),
    /// Render result tables.
    Report(ReportArgs),
}

#[derive(Subcommand)]
enum CorpusCommand {
    /// Sample a corpus from a source directory.
    Build(CorpusBuildArgs),
}

#[derive(Args)]
struct CorpusBuildArgs {
    /// Corpus spec (JSON).
    #[arg(long)]
    spec: PathBuf,
    /// Directory holding sources.json and the text files it lists.
    #[arg(long)]
    sources: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the spec's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum DatasetCommand {
    /// Translate a SQuAD-format dataset and split it.
    Transpose(TransposeArgs),
}

#[derive(Args)]
struct TransposeArgs {
    /// Source dataset in SQuAD v1.1 format.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Provider configuration (JSON). Offline providers when omitted.
    #[arg(long)]
    providers: Option<PathBuf>,
    #[arg(long)]
    translate_endpoint: Option<String>,
    #[arg(long)]
    embed_endpoint: Option<String>,
    #[arg(long, env = "FORGE_PROVIDER_TOKEN", hide_env_values = true)]
    token: Option<String>,
    #[arg(long, default_value = "en")]
    source: Language,
    #[arg(long, default_value = "fr")]
    target: Language,
    /// Seed for the train/dev/test split.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = forge_core::transpose::DEFAULT_ALIGN_THRESHOLD)]
    align_threshold: f64,
    #[arg(long, default_value_t = forge_core::transpose::DEFAULT_FILTER_THRESHOLD)]
    filter_threshold: f64,
    #[arg(long, default_value_t = 3)]
    max_attempts: usize,
    /// Continue from the cursor left by an interrupted run in --out.
    #[arg(long)]
    resume: bool,
}

#[derive(Args)]
struct ResultMeta {
    #[arg(long)]
    setup: Setup,
    /// Label of the pretraining corpus.
    #[arg(long)]
    corpus: String,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Where to write the result document.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum EvalCommand {
    /// Extractive QA: F1 and exact match.
    Qa {
        /// Gold dataset in SQuAD v1.1 format.
        #[arg(long)]
        gold: PathBuf,
        /// JSONL of {"id", "prediction"}.
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        lang: Language,
        #[arg(long, default_value = "squad")]
        task: Task,
        #[command(flatten)]
        meta: ResultMeta,
    },
    /// Three-way NLI accuracy.
    Nli {
        /// JSONL of {"id", "label"}.
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        lang: Language,
        #[command(flatten)]
        meta: ResultMeta,
    },
    /// Minimal-pair accuracy from per-token log-probabilities.
    Clams {
        /// JSONL of minimal pairs.
        #[arg(long)]
        gold: PathBuf,
        /// JSONL of per-sentence token log-probabilities.
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        lang: Language,
        #[command(flatten)]
        meta: ResultMeta,
    },
}

#[derive(Subcommand)]
enum StatsCommand {
    /// One-sided paired bootstrap: is A better than B?
    Bootstrap {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long, default_value_t = forge_core::stats::DEFAULT_ITERATIONS)]
        iterations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON list of [seed_a, seed_b] pairs, when seeds differ.
        #[arg(long)]
        pairing: Option<PathBuf>,
        /// Write the comparison (with the bootstrap report) here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    config: PathBuf,
    /// Write runs, expanded tuples and baselines here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Record planned runs in this registry journal.
    #[arg(long)]
    registry: Option<PathBuf>,
}

#[derive(Subcommand)]
enum RegistryCommand {
    /// Mark a run scored; result files must validate.
    Score {
        #[arg(long)]
        registry: PathBuf,
        #[arg(long)]
        run_id: String,
        #[arg(long = "result", required = true)]
        results: Vec<PathBuf>,
        #[arg(long = "prediction")]
        predictions: Vec<PathBuf>,
        #[arg(long)]
        corpus_digest: Option<String>,
    },
    /// Mark a scored run reported.
    Reported {
        #[arg(long)]
        registry: PathBuf,
        #[arg(long)]
        run_id: String,
    },
    /// Print or write the current state of every run.
    Snapshot {
        #[arg(long)]
        registry: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct ValidateArgs {
    /// One of pll, qa_pred, nli_pred, corpus_manifest, result, qa_dataset.
    #[arg(long)]
    kind: InterchangeKind,
    #[arg(required = true)]
    paths: Vec<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Result documents, or directories of them.
    #[arg(long = "results", required = true)]
    results: Vec<PathBuf>,
    /// Bootstrap comparisons: one object or a list per file.
    #[arg(long = "comparisons")]
    comparisons: Vec<PathBuf>,
    /// Baseline designations (JSON list).
    #[arg(long, conflicts_with = "plan")]
    baselines: Option<PathBuf>,
    /// Derive baselines from an experiment configuration instead.
    #[arg(long)]
    plan: Option<PathBuf>,
    /// Directory for report.md and report.csv.
    #[arg(long)]
    out: PathBuf,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use forge_core::Error;
    match err.downcast_ref::<Error>() {
        Some(Error::Validation { .. }) => EXIT_VALIDATION,
        Some(Error::MissingArtifact(_)) => EXIT_MISSING,
        Some(Error::Io { source, .. }) if source.kind() == std::io::ErrorKind::NotFound => EXIT_MISSING,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
