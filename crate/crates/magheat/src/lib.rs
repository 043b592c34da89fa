//! Scenario runner for the magheat spectral laboratory: reads a JSON
//! scenario, runs its tasks on the core library and writes CSV tables, plot
//! data and a JSON report.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod datum;
pub mod output;
pub mod scenario;
pub mod tasks;

use std::path::{Path, PathBuf};

use serde_json::json;

use crate::datum::Datum;
use crate::output::{commit_files, scenario_hash};
use crate::scenario::{Scenario, Task};
use crate::tasks::{Assertion, Context};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("output error: {0}")]
    Io(String),
}

impl From<magheat_core::Error> for RunError {
    fn from(e: magheat_core::Error) -> Self {
        if e.is_configuration() {
            RunError::Config(e.to_string())
        } else {
            RunError::Numeric(e.to_string())
        }
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numeric(_) | RunError::Io(_) => 3,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub out_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TaskReport {
    pub index: usize,
    pub task: String,
    pub assertions: Vec<Assertion>,
    pub warnings: Vec<String>,
    pub files: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub out_dir: PathBuf,
    pub hash: String,
    pub tasks: Vec<TaskReport>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.tasks.iter().all(|t| t.assertions.iter().all(|a| a.pass))
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

/// Runs a scenario file. Configuration and numeric errors leave the output
/// directory untouched; assertion failures still write their outputs.
pub fn run(path: &Path, opts: &RunOptions) -> Result<RunReport, RunError> {
    let bytes = std::fs::read(path).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|_| RunError::Config("scenario is not UTF-8".into()))?;
    let scenario = Scenario::parse(text)?;
    run_scenario(&scenario, &scenario_hash(&bytes), opts)
}

pub fn run_scenario(scenario: &Scenario, hash: &str, opts: &RunOptions) -> Result<RunReport, RunError> {
    scenario.validate()?;
    let problem = scenario.problem_spec()?;
    let spectrum = scenario.spectrum()?;
    let seed = opts.seed.or(scenario.seed).unwrap_or(0);
    let out_dir = opts
        .out_dir
        .clone()
        .or_else(|| scenario.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("magheat-out"));
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(j) = opts.jobs {
        builder = builder.num_threads(j.max(1));
    }
    let pool = builder.build().map_err(|e| RunError::Numeric(e.to_string()))?;
    let datum = scenario
        .datum
        .as_ref()
        .map(|d| Datum::build(d, &spectrum, &scenario.truncation))
        .transpose()?;
    let ctx = Context { scenario, problem, spectrum, datum, seed, pool: &pool };

    // The spectrum task goes first; the rest keep their order.
    let mut order: Vec<usize> = (0..scenario.tasks.len()).collect();
    order.sort_by_key(|&i| !matches!(scenario.tasks[i], Task::Spectrum));

    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    let mut reports = Vec::new();
    let mut summaries = Vec::new();
    for i in order {
        let task = &scenario.tasks[i];
        let mut out = ctx.run(task)?;
        if opts.strict {
            for w in &out.warnings {
                out.assertions.push(Assertion { name: "strict".into(), pass: false, detail: w.clone() });
            }
        }
        let stem = format!("{i:02}_{}", task.name());
        let mut names = Vec::new();
        for t in &out.tables {
            let name = format!("{stem}_{}.csv", t.name);
            files.push((name.clone(), t.to_csv(hash)?));
            names.push(name);
        }
        for p in &out.plots {
            let name = format!("{stem}_{}.dat", p.name);
            files.push((name.clone(), p.render(hash).into_bytes()));
            names.push(name);
        }
        summaries.push(json!({
            "index": i,
            "task": task.name(),
            "summary": out.summary,
            "assertions": out.assertions,
            "warnings": out.warnings,
            "files": names,
        }));
        reports.push(TaskReport {
            index: i,
            task: task.name().into(),
            assertions: out.assertions,
            warnings: out.warnings,
            files: names,
        });
    }
    let report = RunReport { out_dir, hash: hash.into(), tasks: reports };
    let doc = json!({
        "scenario": scenario.name,
        "scenario_sha256": hash,
        "seed": seed,
        "strict": opts.strict,
        "status": if report.passed() { "pass" } else { "fail" },
        "tasks": summaries,
    });
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| RunError::Io(e.to_string()))?;
    text.push('\n');
    files.push(("report.json".into(), text.into_bytes()));
    commit_files(&report.out_dir, &files)?;
    Ok(report)
}
