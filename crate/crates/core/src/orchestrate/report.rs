//! Results tables: one section per test language, one table per setup,
//! one column per task. Non-monolingual cells carry `*` when a paired
//! bootstrap comparison against the designated monolingual baseline is
//! significant.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::plan::ExperimentPlan;
use crate::error::{Error, Result};
use crate::eval::{aggregate_seeds, EvalResult, Setup, Task};
use crate::lang::Language;
use crate::stats::{mark_significance, BootstrapReport, DEFAULT_ALPHA};

/// Bootstrap outcome of `candidate` against `baseline` for one task and
/// test language.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub task: Task,
    pub test_language: Language,
    pub candidate: String,
    pub baseline: String,
    #[serde(flatten)]
    pub report: BootstrapReport,
}

/// Designates the monolingual corpus a candidate is compared with when
/// tested in `test_language`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BaselineEntry {
    pub test_language: Language,
    pub pretrain_corpus: String,
    pub baseline: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReportDocument {
    pub markdown: String,
    pub csv: String,
}

/// Pairs every non-monolingual run with the monolingual run of the same
/// corpus kind in the same test language.
pub fn derive_baselines(plan: &ExperimentPlan) -> Vec<BaselineEntry> {
    let mut out = Vec::new();
    for run in plan.runs.iter().filter(|r| r.setup != Setup::Monolingual) {
        let Some(kind) = &run.corpus_kind else { continue };
        let baseline = plan.runs.iter().find(|m| {
            m.setup == Setup::Monolingual && m.test_language == run.test_language && m.corpus_kind.as_ref() == Some(kind)
        });
        if let Some(m) = baseline {
            out.push(BaselineEntry {
                test_language: run.test_language,
                pretrain_corpus: run.pretrain_corpus.clone(),
                baseline: m.pretrain_corpus.clone(),
            });
        }
    }
    out.sort();
    out.dedup();
    out
}

struct Row {
    language: Language,
    setup: Setup,
    corpus: String,
    values: BTreeMap<Task, f64>,
    starred: HashSet<Task>,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Renders Markdown and CSV tables. Results are reduced to each task's
/// headline metric and averaged over seeds. Row order within a table
/// follows first appearance in `results`. A comparison naming a candidate
/// with no designated baseline, or a baseline with no result, is an error.
pub fn emit_report(results: &[EvalResult], baselines: &[BaselineEntry], comparisons: &[Comparison]) -> Result<ReportDocument> {
    let mut groups: Vec<(crate::eval::ResultKey, Vec<EvalResult>)> = Vec::new();
    for r in results.iter().filter(|r| r.metric == r.task.headline_metric()) {
        r.validate()?;
        let key = r.key();
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r.clone()),
            None => groups.push((key, vec![r.clone()])),
        }
    }

    let mut rows: Vec<Row> = Vec::new();
    for (key, members) in &groups {
        let value = aggregate_seeds(members)?.value;
        let pos = rows
            .iter()
            .position(|row| row.language == key.test_language && row.setup == key.setup && row.corpus == key.pretrain_corpus);
        let row = match pos {
            Some(i) => &mut rows[i],
            None => {
                rows.push(Row {
                    language: key.test_language,
                    setup: key.setup,
                    corpus: key.pretrain_corpus.clone(),
                    values: BTreeMap::new(),
                    starred: HashSet::new(),
                });
                rows.last_mut().unwrap()
            }
        };
        row.values.insert(key.task, value);
    }

    let baseline_of: BTreeMap<(Language, &str), &str> = baselines
        .iter()
        .map(|b| ((b.test_language, b.pretrain_corpus.as_str()), b.baseline.as_str()))
        .collect();
    let mut seen = HashSet::new();
    let mut stars: Vec<(usize, Task)> = Vec::new();
    for c in comparisons {
        let label = format!("{} / {} / {}", c.candidate, c.task, c.test_language);
        let Some(row) = rows
            .iter()
            .position(|r| r.language == c.test_language && r.corpus == c.candidate && r.values.contains_key(&c.task))
        else {
            return Err(Error::Report(format!("comparison {label} has no result")));
        };
        if rows[row].setup == Setup::Monolingual {
            continue;
        }
        if !seen.insert((c.task, c.test_language, c.candidate.clone())) {
            return Err(Error::Report(format!("comparison {label} given twice")));
        }
        let Some(designated) = baseline_of.get(&(c.test_language, c.candidate.as_str())) else {
            return Err(Error::Report(format!("comparison {label} has no designated baseline")));
        };
        if *designated != c.baseline {
            return Err(Error::Report(format!(
                "comparison {label} is against {}, but the designated baseline is {designated}",
                c.baseline
            )));
        }
        let baseline_present = rows.iter().any(|r| {
            r.setup == Setup::Monolingual
                && r.language == c.test_language
                && r.corpus == c.baseline
                && r.values.contains_key(&c.task)
        });
        if !baseline_present {
            return Err(Error::Report(format!("baseline {} has no {} result in {}", c.baseline, c.task, c.test_language)));
        }
        if mark_significance(&c.report, DEFAULT_ALPHA) {
            stars.push((row, c.task));
        }
    }
    for (row, task) in stars {
        rows[row].starred.insert(task);
    }

    let tasks: Vec<Task> = Task::ALL
        .into_iter()
        .filter(|t| rows.iter().any(|r| r.values.contains_key(t)))
        .collect();
    let cell = |row: &Row, task: Task| -> Option<String> {
        row.values.get(&task).map(|v| {
            let star = if row.starred.contains(&task) { "*" } else { "" };
            format!("{v:.2}{star}")
        })
    };

    let mut md = String::from("# Results\n\n");
    md.push_str(
        "Headline metric per task (F1 for question answering, accuracy otherwise), averaged over seeds. \
         `*` marks a significant improvement over the monolingual baseline (paired bootstrap, p < 0.05).\n",
    );
    let mut csv = String::from("test_language,setup,pretrain_corpus");
    for t in &tasks {
        csv.push(',');
        csv.push_str(t.key());
    }
    csv.push('\n');

    for language in Language::ALL {
        if !rows.iter().any(|r| r.language == language) {
            continue;
        }
        let _ = write!(md, "\n## Tested in {}\n", language.display_name());
        for setup in Setup::ALL {
            let table: Vec<&Row> = rows.iter().filter(|r| r.language == language && r.setup == setup).collect();
            if table.is_empty() {
                continue;
            }
            let _ = write!(md, "\n### {}\n\n| Pretraining corpus |", setup.title());
            for t in &tasks {
                let _ = write!(md, " {} |", t.title());
            }
            md.push_str("\n| --- |");
            for _ in &tasks {
                md.push_str(" ---: |");
            }
            md.push('\n');
            for row in table {
                let _ = write!(md, "| {} |", row.corpus);
                let _ = write!(csv, "{},{},{}", language.code(), setup.key(), csv_field(&row.corpus));
                for &t in &tasks {
                    let value = cell(row, t);
                    let _ = write!(md, " {} |", value.as_deref().unwrap_or("-"));
                    csv.push(',');
                    csv.push_str(value.as_deref().unwrap_or(""));
                }
                md.push('\n');
                csv.push('\n');
            }
        }
    }

    let mut listed: Vec<&Comparison> = comparisons
        .iter()
        .filter(|c| rows.iter().any(|r| r.corpus == c.candidate && r.language == c.test_language && r.setup != Setup::Monolingual))
        .collect();
    listed.sort_by(|a, b| {
        (a.test_language, a.task, &a.candidate).cmp(&(b.test_language, b.task, &b.candidate))
    });
    if !listed.is_empty() {
        md.push_str("\n## Significance tests\n\n| Test language | Task | Candidate | Baseline | Delta | p |\n| --- | --- | --- | --- | ---: | ---: |\n");
        for c in listed {
            let _ = writeln!(
                md,
                "| {} | {} | {} | {} | {:+.2} | {:.4} |",
                c.test_language.display_name(),
                c.task.title(),
                c.candidate,
                c.baseline,
                100.0 * c.report.observed_delta,
                c.report.p_value
            );
        }
    }
    Ok(ReportDocument { markdown: md, csv })
}
