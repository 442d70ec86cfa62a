use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{Setup, Task};
use crate::lang::Language;

fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3]
}

/// A pretraining corpus referenced by runs. `kind` groups corpora of the
/// same type across languages (e.g. `childes`, `wikipedia`) for baseline
/// lookup.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub label: String,
    pub kind: String,
    pub languages: Vec<Language>,
}

/// Every corpus tested in every listed language; setups are inferred.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixConfig {
    pub test_languages: Vec<Language>,
    pub tasks: Vec<Task>,
}

/// An explicitly declared run. Languages default to those of the corpus
/// entry with the same label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default)]
    pub run_id: Option<String>,
    pub setup: Setup,
    pub pretrain_corpus: String,
    #[serde(default)]
    pub pretrain_languages: Option<Vec<Language>>,
    pub test_language: Language,
    #[serde(default)]
    pub finetune_language: Option<Language>,
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
}

/// The experiment file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub corpora: Vec<CorpusEntry>,
    #[serde(default)]
    pub matrix: Option<MatrixConfig>,
    #[serde(default)]
    pub runs: Vec<RunConfig>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| Error::json(path.display().to_string(), e))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSpec {
    pub run_id: String,
    pub setup: Setup,
    pub pretrain_corpus: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corpus_kind: Option<String>,
    pub pretrain_languages: Vec<Language>,
    pub test_language: Language,
    pub finetune_language: Language,
    pub tasks: Vec<Task>,
    pub seeds: Vec<u64>,
}

/// One (setup, corpus, test language, task, seed) tuple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlannedRun {
    pub run_id: String,
    pub parent: String,
    pub setup: Setup,
    pub pretrain_corpus: String,
    pub test_language: Language,
    pub finetune_language: Language,
    pub task: Task,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub runs: Vec<RunSpec>,
}

impl ExperimentPlan {
    pub fn expand(&self) -> Vec<PlannedRun> {
        let mut out = Vec::new();
        for run in &self.runs {
            for &task in &run.tasks {
                for &seed in &run.seeds {
                    out.push(PlannedRun {
                        run_id: format!("{}/{}/seed{}", run.run_id, task, seed),
                        parent: run.run_id.clone(),
                        setup: run.setup,
                        pretrain_corpus: run.pretrain_corpus.clone(),
                        test_language: run.test_language,
                        finetune_language: run.finetune_language,
                        task,
                        seed,
                    });
                }
            }
        }
        out
    }
}

fn infer_setup(languages: &[Language], test: Language) -> Setup {
    let set: BTreeSet<Language> = languages.iter().copied().collect();
    if set.len() == 2 {
        Setup::Bilingual
    } else if set.contains(&test) {
        Setup::Monolingual
    } else {
        Setup::CrossLingual
    }
}

fn check_run(run: &RunSpec) -> Result<()> {
    let invalid = |message: String| Error::Validation {
        subject: run.run_id.clone(),
        message,
    };
    let langs: BTreeSet<Language> = run.pretrain_languages.iter().copied().collect();
    if langs.is_empty() {
        return Err(invalid("no pretraining languages".into()));
    }
    if run.finetune_language != run.test_language {
        return Err(invalid(format!(
            "fine-tuning language {} differs from test language {}",
            run.finetune_language, run.test_language
        )));
    }
    match run.setup {
        Setup::CrossLingual if langs.contains(&run.test_language) => {
            return Err(invalid(format!("cross-lingual run pretrains on its test language {}", run.test_language)))
        }
        Setup::Bilingual if langs != Language::ALL.into_iter().collect() => {
            return Err(invalid("bilingual run must pretrain on both en and fr".into()))
        }
        Setup::Monolingual if langs.len() != 1 || !langs.contains(&run.test_language) => {
            return Err(invalid("monolingual run must pretrain only on its test language".into()))
        }
        _ => {}
    }
    if run.tasks.is_empty() {
        return Err(invalid("empty task list".into()));
    }
    if run.seeds.is_empty() {
        return Err(invalid("empty seed list".into()));
    }
    if run.seeds.iter().collect::<HashSet<_>>().len() != run.seeds.len() {
        return Err(invalid("duplicate seeds".into()));
    }
    if run.tasks.iter().collect::<HashSet<_>>().len() != run.tasks.len() {
        return Err(invalid("duplicate tasks".into()));
    }
    Ok(())
}

/// Expands the configuration into run specs and checks every constraint:
/// fine-tuning happens in the test language, cross-lingual runs never see
/// the test language in pretraining, bilingual runs see both languages, and
/// no (setup, corpus, test language, task, seed) tuple appears twice.
pub fn plan_runs(config: &ExperimentConfig) -> Result<ExperimentPlan> {
    let corpus = |label: &str| config.corpora.iter().find(|c| c.label == label);
    let mut runs = Vec::new();

    if let Some(matrix) = &config.matrix {
        for entry in &config.corpora {
            for &test in &matrix.test_languages {
                let setup = infer_setup(&entry.languages, test);
                runs.push(RunSpec {
                    run_id: format!("{}/{}/{}", setup.key(), entry.label, test),
                    setup,
                    pretrain_corpus: entry.label.clone(),
                    corpus_kind: Some(entry.kind.clone()),
                    pretrain_languages: entry.languages.clone(),
                    test_language: test,
                    finetune_language: test,
                    tasks: matrix.tasks.clone(),
                    seeds: config.seeds.clone(),
                });
            }
        }
    }
    for (i, run) in config.runs.iter().enumerate() {
        let entry = corpus(&run.pretrain_corpus);
        let run_id = run
            .run_id
            .clone()
            .unwrap_or_else(|| format!("{}/{}/{}", run.setup.key(), run.pretrain_corpus, run.test_language));
        let languages = match (&run.pretrain_languages, entry) {
            (Some(l), _) => l.clone(),
            (None, Some(e)) => e.languages.clone(),
            (None, None) => {
                return Err(Error::Validation {
                    subject: run_id,
                    message: format!("run {i}: unknown corpus `{}` and no pretrain_languages", run.pretrain_corpus),
                })
            }
        };
        runs.push(RunSpec {
            run_id,
            setup: run.setup,
            pretrain_corpus: run.pretrain_corpus.clone(),
            corpus_kind: entry.map(|e| e.kind.clone()),
            pretrain_languages: languages,
            test_language: run.test_language,
            finetune_language: run.finetune_language.unwrap_or(run.test_language),
            tasks: run.tasks.clone(),
            seeds: run.seeds.clone().unwrap_or_else(|| config.seeds.clone()),
        });
    }

    let mut ids = HashSet::new();
    for run in &runs {
        check_run(run)?;
        if !ids.insert(run.run_id.clone()) {
            return Err(Error::Validation {
                subject: run.run_id.clone(),
                message: "run id declared twice".into(),
            });
        }
    }
    let plan = ExperimentPlan { runs };
    let mut tuples = HashSet::new();
    for p in plan.expand() {
        if !tuples.insert((p.setup, p.pretrain_corpus.clone(), p.test_language, p.task, p.seed)) {
            return Err(Error::Validation {
                subject: p.parent,
                message: format!("{} / {} / seed {} planned twice", p.pretrain_corpus, p.task, p.seed),
            });
        }
    }
    Ok(plan)
}
