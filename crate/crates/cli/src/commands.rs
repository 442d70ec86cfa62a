use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use forge_core::corpus::{build_corpus, load_sources, pools_by_language, read_spec, segment_sentences, write_corpus};
use forge_core::eval::io::{read_json, read_jsonl, read_result, write_json, write_jsonl, NliPrediction, QaPrediction};
use forge_core::eval::{clams_accuracy, evaluate_nli, evaluate_qa, EvalResult, Metric, MinimalPair, SentenceScore, Task};
use forge_core::orchestrate::{
    derive_baselines, emit_report, plan_runs, validate_interchange, Artifacts, BaselineEntry, Comparison, ExperimentConfig,
    Registry,
};
use forge_core::stats::{pair_results, paired_bootstrap};
use forge_core::transpose::{
    build_translated_dataset, read_squad, split_dataset, squad_to_string, AlignmentReport, Cursor, EmbeddingProvider,
    FilterDecision, ProviderConfig, TransposeConfig, TransposeCounts, TranslationProvider, QAExample, DEFAULT_SPLIT_RATIOS,
};
use forge_core::Error;

use crate::{
    Command, CorpusBuildArgs, CorpusCommand, DatasetCommand, EvalCommand, PlanArgs, RegistryCommand, ReportArgs, ResultMeta,
    StatsCommand, TransposeArgs, ValidateArgs, EXIT_VALIDATION,
};

const CURSOR_FILE: &str = "cursor.json";
const PROGRESS_FILE: &str = "progress.json";

pub fn run(command: Command) -> Result<u8> {
    match command {
        Command::Corpus(CorpusCommand::Build(args)) => corpus_build(args),
        Command::Dataset(DatasetCommand::Transpose(args)) => transpose(args),
        Command::Eval(cmd) => eval(cmd),
        Command::Stats(StatsCommand::Bootstrap {
            a,
            b,
            iterations,
            seed,
            pairing,
            out,
        }) => bootstrap(&a, &b, iterations, seed, pairing.as_deref(), out.as_deref()),
        Command::Plan(args) => plan(args),
        Command::Registry(cmd) => registry(cmd),
        Command::Validate(args) => validate(args),
        Command::Report(args) => report(args),
    }
}

fn require(path: &Path) -> Result<()> {
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_path_buf()).into());
    }
    Ok(())
}

fn print_json(value: &impl Serialize) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn corpus_build(args: CorpusBuildArgs) -> Result<u8> {
    require(&args.spec)?;
    require(&args.sources)?;
    let mut spec = read_spec(&args.spec)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let docs = load_sources(&args.sources)?;
    let pools = pools_by_language(docs.iter().flat_map(segment_sentences));
    let corpus = build_corpus(&spec, &pools)?;
    for w in &corpus.manifest.warnings {
        warn!("{w}");
    }
    write_corpus(&args.out, &corpus)?;
    info!("wrote {} words to {}", corpus.manifest.total_words, args.out.display());
    print_json(&json!({
        "total_words": corpus.manifest.total_words,
        "total_sentences": corpus.manifest.total_sentences,
        "content_digest": corpus.manifest.content_digest,
    }))?;
    Ok(0)
}

/// Everything produced by the completed part of an interrupted run.
#[derive(Serialize, Deserialize, Default)]
struct Progress {
    examples: Vec<QAExample>,
    alignments: Vec<AlignmentReport>,
    filters: Vec<FilterDecision>,
    counts: TransposeCounts,
}

fn transpose(args: TransposeArgs) -> Result<u8> {
    require(&args.input)?;
    let mut providers = match &args.providers {
        Some(path) => {
            require(path)?;
            read_json::<ProviderConfig>(path)?
        }
        None => ProviderConfig::offline(),
    };
    if let Some(endpoint) = &args.translate_endpoint {
        providers.translation = TranslationProvider::ExternalService {
            endpoint: endpoint.clone(),
        };
    }
    if let Some(endpoint) = &args.embed_endpoint {
        providers.embedding = EmbeddingProvider::ExternalService {
            endpoint: endpoint.clone(),
        };
    }
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let cursor_path = args.out.join(CURSOR_FILE);
    let progress_path = args.out.join(PROGRESS_FILE);

    let (start_group, mut progress) = if args.resume {
        require(&cursor_path)?;
        require(&progress_path)?;
        let cursor: Cursor = read_json(&cursor_path)?;
        info!("resuming at context group {} ({})", cursor.next_group, cursor.example_id);
        (cursor.next_group, read_json::<Progress>(&progress_path)?)
    } else {
        (0, Progress::default())
    };

    let source = read_squad(&args.input, args.source)?;
    let cfg = TransposeConfig {
        source: args.source,
        target: args.target,
        align_threshold: args.align_threshold,
        filter_threshold: args.filter_threshold,
        max_attempts: args.max_attempts,
        start_group,
    };
    let translator = providers.translator(args.token.clone());
    let embedder = providers.embedder(args.token.clone());
    let outcome = build_translated_dataset(&source, translator.as_ref(), embedder.as_ref(), &cfg)?;

    progress.examples.extend(outcome.examples);
    progress.alignments.extend(outcome.alignments);
    progress.filters.extend(outcome.filters);
    let c = &mut progress.counts;
    c.input = outcome.counts.input;
    c.processed += outcome.counts.processed;
    c.kept += outcome.counts.kept;
    c.alignment_rejected += outcome.counts.alignment_rejected;
    c.filter_rejected += outcome.counts.filter_rejected;

    write_jsonl(&args.out.join("alignment.jsonl"), &progress.alignments)?;
    write_jsonl(&args.out.join("filter.jsonl"), &progress.filters)?;

    if let Some(cursor) = outcome.cursor {
        write_json(&progress_path, &progress)?;
        write_json(&cursor_path, &cursor)?;
        bail!(
            "stopped at context group {} (example {}): {}; rerun with --resume",
            cursor.next_group,
            cursor.example_id,
            cursor.error
        );
    }

    let split = split_dataset(&progress.examples, DEFAULT_SPLIT_RATIOS, args.seed)?;
    for w in &split.warnings {
        warn!("{w}");
    }
    for (name, part) in [("train", &split.train), ("dev", &split.dev), ("test", &split.test)] {
        let path = args.out.join(format!("{name}.json"));
        fs::write(&path, squad_to_string(part)?).with_context(|| format!("writing {}", path.display()))?;
    }
    let summary = json!({
        "source_language": args.source,
        "target_language": args.target,
        "providers": providers,
        "align_threshold": args.align_threshold,
        "filter_threshold": args.filter_threshold,
        "split_seed": args.seed,
        "counts": progress.counts,
        "split": {"train": split.train.len(), "dev": split.dev.len(), "test": split.test.len()},
        "warnings": split.warnings,
    });
    write_json(&args.out.join("summary.json"), &summary)?;
    for stale in [&cursor_path, &progress_path] {
        if stale.exists() {
            fs::remove_file(stale).with_context(|| format!("removing {}", stale.display()))?;
        }
    }
    print_json(&summary)?;
    Ok(0)
}

fn finish_result(result: EvalResult, meta: &ResultMeta) -> Result<u8> {
    if let Some(out) = &meta.out {
        write_json(out, &result)?;
    }
    print_json(&json!({
        "task": result.task,
        "metric": result.metric,
        "value": result.value,
        "examples": result.per_example.as_ref().map_or(0, Vec::len),
    }))?;
    Ok(0)
}

fn eval(cmd: EvalCommand) -> Result<u8> {
    match cmd {
        EvalCommand::Qa {
            gold,
            pred,
            lang,
            task,
            meta,
        } => {
            require(&gold)?;
            require(&pred)?;
            if task.headline_metric() != Metric::F1 {
                bail!("task {task} is not a QA task");
            }
            let gold = read_squad(&gold, lang)?;
            let preds: BTreeMap<String, String> = read_jsonl::<QaPrediction>(&pred)?
                .into_iter()
                .map(|p| (p.id, p.prediction))
                .collect();
            let eval = evaluate_qa(&gold, &preds, lang)?;
            info!("F1 {:.2}, EM {:.2}", eval.f1, eval.em);
            let scores = eval.per_example.into_iter().map(|(id, f1, _)| (id, f1)).collect();
            let result = EvalResult::from_scores(task, meta.setup, &meta.corpus, lang, meta.seed, Metric::F1, scores)?;
            finish_result(result, &meta)
        }
        EvalCommand::Nli { gold, pred, lang, meta } => {
            require(&gold)?;
            require(&pred)?;
            let gold: Vec<(String, _)> = read_jsonl::<NliPrediction>(&gold)?
                .into_iter()
                .map(|g| (g.id, g.label))
                .collect();
            let preds = read_jsonl::<NliPrediction>(&pred)?
                .into_iter()
                .map(|p| (p.id, p.label))
                .collect();
            let (_, per_example) = evaluate_nli(&gold, &preds)?;
            let result = EvalResult::from_scores(Task::Xnli, meta.setup, &meta.corpus, lang, meta.seed, Metric::Accuracy, per_example)?;
            finish_result(result, &meta)
        }
        EvalCommand::Clams { gold, pred, lang, meta } => {
            require(&gold)?;
            require(&pred)?;
            let pairs: Vec<MinimalPair> = read_jsonl(&gold)?;
            let scores: Vec<SentenceScore> = read_jsonl(&pred)?;
            let summary = clams_accuracy(&pairs, &scores)?;
            for (phenomenon, acc) in &summary.per_phenomenon {
                info!("{phenomenon}: {:.2}", 100.0 * acc);
            }
            let per_example = summary.decisions.iter().map(|(id, d)| (id.clone(), d.indicator())).collect();
            let result = EvalResult::from_scores(Task::Clams, meta.setup, &meta.corpus, lang, meta.seed, Metric::Accuracy, per_example)?;
            finish_result(result, &meta)
        }
    }
}

fn bootstrap(a: &Path, b: &Path, iterations: usize, seed: u64, pairing: Option<&Path>, out: Option<&Path>) -> Result<u8> {
    require(a)?;
    require(b)?;
    let ra = read_result(a)?;
    let rb = read_result(b)?;
    if ra.task != rb.task || ra.test_language != rb.test_language || ra.metric != rb.metric {
        bail!("results differ in task, test language or metric");
    }
    let seed_map: Option<Vec<(u64, u64)>> = match pairing {
        Some(p) => {
            require(p)?;
            Some(read_json(p)?)
        }
        None => None,
    };
    let samples = pair_results(&ra, &rb, seed_map.as_deref())?;
    let report = paired_bootstrap(&samples, iterations, seed)?;
    let comparison = Comparison {
        task: ra.task,
        test_language: ra.test_language,
        candidate: ra.pretrain_corpus,
        baseline: rb.pretrain_corpus,
        report,
    };
    if let Some(out) = out {
        write_json(out, &comparison)?;
    }
    print_json(&comparison)?;
    Ok(0)
}

fn plan(args: PlanArgs) -> Result<u8> {
    require(&args.config)?;
    let config = ExperimentConfig::from_path(&args.config)?;
    let plan = plan_runs(&config)?;
    let expanded = plan.expand();
    let summary = json!({
        "runs": plan.runs,
        "expanded": expanded,
        "baselines": derive_baselines(&plan),
    });
    if let Some(out) = &args.out {
        write_json(out, &summary)?;
    }
    if let Some(path) = &args.registry {
        let added = Registry::open(path).plan(&plan)?;
        info!("registered {added} new runs in {}", path.display());
    }
    println!("{} runs, {} planned tuples", plan.runs.len(), expanded.len());
    Ok(0)
}

fn registry(cmd: RegistryCommand) -> Result<u8> {
    match cmd {
        RegistryCommand::Score {
            registry,
            run_id,
            results,
            predictions,
            corpus_digest,
        } => {
            let record = Registry::open(registry).mark_scored(
                &run_id,
                Artifacts {
                    corpus_digest,
                    predictions,
                    results,
                },
            )?;
            print_json(&record)?;
        }
        RegistryCommand::Reported { registry, run_id } => {
            print_json(&Registry::open(registry).mark_reported(&run_id)?)?;
        }
        RegistryCommand::Snapshot { registry, out } => {
            require(&registry)?;
            let reg = Registry::open(registry);
            match out {
                Some(out) => reg.write_snapshot(&out)?,
                None => print_json(&reg.snapshot()?.into_values().collect::<Vec<_>>())?,
            }
        }
    }
    Ok(0)
}

fn validate(args: ValidateArgs) -> Result<u8> {
    let mut failed = false;
    for path in &args.paths {
        require(path)?;
        let violations = validate_interchange(path, args.kind)?;
        if violations.is_empty() {
            println!("{}: ok", path.display());
        } else {
            failed = true;
            for v in violations {
                println!("{}: {v}", path.display());
            }
        }
    }
    Ok(if failed { EXIT_VALIDATION } else { 0 })
}

fn json_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for path in paths {
        require(path)?;
        if path.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(path)
                .with_context(|| format!("listing {}", path.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            found.sort();
            out.extend(found);
        } else {
            out.push(path.clone());
        }
    }
    Ok(out)
}

fn report(args: ReportArgs) -> Result<u8> {
    let results = json_files(&args.results)?
        .iter()
        .map(|p| read_result(p))
        .collect::<forge_core::Result<Vec<_>>>()?;
    let mut comparisons: Vec<Comparison> = Vec::new();
    for path in json_files(&args.comparisons)? {
        match read_json::<Value>(&path)? {
            Value::Array(items) => {
                for item in items {
                    comparisons.push(serde_json::from_value(item).with_context(|| format!("reading {}", path.display()))?);
                }
            }
            single => comparisons.push(serde_json::from_value(single).with_context(|| format!("reading {}", path.display()))?),
        }
    }
    let baselines: Vec<BaselineEntry> = match (&args.baselines, &args.plan) {
        (Some(path), _) => {
            require(path)?;
            read_json(path)?
        }
        (None, Some(config)) => {
            require(config)?;
            derive_baselines(&plan_runs(&ExperimentConfig::from_path(config)?)?)
        }
        (None, None) => Vec::new(),
    };
    let doc = emit_report(&results, &baselines, &comparisons)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    fs::write(args.out.join("report.md"), &doc.markdown)?;
    fs::write(args.out.join("report.csv"), &doc.csv)?;
    print!("{}", doc.markdown);
    Ok(0)
}
