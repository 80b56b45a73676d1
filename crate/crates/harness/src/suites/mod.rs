//! Experiment suites. Each suite expands its config into independent tasks,
//! runs them on a rayon pool, and folds the results into a table, a list of
//! records and a set of aggregate checks.

mod apps;
mod approx;
mod baseline;
mod bounds;
mod bqp;
mod estimate;
mod separation;

use std::path::PathBuf;

use anyhow::{Context, Result};
use powertrace_core::numkernel::{DensityMatrix, Observable};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::config::{ResolvedConfig, RunSettings, Suite};
use crate::instance::{build_observable, build_state, record_seed, InstanceSpec};
use crate::output::{canonical_json, output_dir, unix_time, write_atomic, Cell, RunRecord, Table, TOOL_VERSION};

/// What one task produced.
pub(crate) struct Outcome<P> {
    pub report: Value,
    /// `None` when the task has no oracle to be graded against.
    pub pass: Option<bool>,
    pub rows: Vec<Vec<Cell>>,
    pub data: P,
}

impl<P> Outcome<P> {
    pub fn new(report: impl Serialize, pass: Option<bool>, rows: Vec<Vec<Cell>>, data: P) -> Result<Self> {
        Ok(Self { report: serde_json::to_value(report)?, pass, rows, data })
    }
}

/// An aggregate property checked over all records of a suite.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub pass: bool,
}

impl Check {
    pub fn within(name: impl Into<String>, value: f64, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), value, lo: Some(lo), hi: Some(hi), pass: value >= lo && value <= hi }
    }

    pub fn at_most(name: impl Into<String>, value: f64, hi: f64) -> Self {
        Self { name: name.into(), value, lo: None, hi: Some(hi), pass: value <= hi }
    }

    pub fn at_least(name: impl Into<String>, value: f64, lo: f64) -> Self {
        Self { name: name.into(), value, lo: Some(lo), hi: None, pass: value >= lo }
    }
}

/// Contents of `summary.json`. Carries no timestamp, so reruns are byte-identical.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub suite: Suite,
    pub config_hash: String,
    pub config: ResolvedConfig,
    pub records: usize,
    pub errors: usize,
    pub graded: usize,
    pub passed: usize,
    pub pass_fraction: Option<f64>,
    pub pass_threshold: f64,
    pub checks: Vec<Check>,
    pub ok: bool,
    pub tool_version: String,
}

pub struct SuiteRun {
    pub summary: Summary,
    pub records: Vec<RunRecord>,
    pub table: Table,
    pub dir: PathBuf,
}

/// Results of the tasks of one suite, in task order.
pub(crate) struct Collected<P> {
    pub specs: Vec<InstanceSpec>,
    pub outcomes: Vec<Result<Outcome<P>>>,
}

impl<P> Collected<P> {
    /// Payloads of the successful tasks, paired with their specs.
    pub fn data(&self) -> impl Iterator<Item = (&InstanceSpec, &P)> {
        self.specs.iter().zip(&self.outcomes).filter_map(|(s, o)| o.as_ref().ok().map(|o| (s, &o.data)))
    }
}

pub(crate) fn execute<T, P, F>(jobs: usize, tasks: Vec<(InstanceSpec, T)>, f: F) -> Result<Collected<P>>
where
    T: Sync,
    P: Send,
    F: Fn(&InstanceSpec, &T) -> Result<Outcome<P>> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().context("building the worker pool")?;
    let outcomes = pool.install(|| tasks.par_iter().map(|(spec, task)| f(spec, task)).collect::<Vec<_>>());
    Ok(Collected { specs: tasks.into_iter().map(|(s, _)| s).collect(), outcomes })
}

/// Tasks for every `(k, eps, run)` in config order, each with its derived seed.
pub(crate) fn grid_tasks(cfg: &ResolvedConfig, runs: usize) -> Vec<(InstanceSpec, ())> {
    let mut tasks = Vec::new();
    for &k in &cfg.k {
        for &eps in &cfg.eps {
            for _ in 0..runs {
                let seed = record_seed(cfg.seed, tasks.len());
                tasks.push((InstanceSpec::from_config(cfg, seed, k, eps), ()));
            }
        }
    }
    tasks
}

pub(crate) fn instance(cfg: &ResolvedConfig, spec: &InstanceSpec) -> Result<(DensityMatrix, Observable)> {
    Ok((build_state(cfg, spec)?, build_observable(cfg, spec)?))
}

/// Runs `cfg.suite` and writes its three output files.
pub fn run_suite(cfg: &ResolvedConfig, settings: &RunSettings) -> Result<SuiteRun> {
    let (header, specs, graded, checks) = match cfg.suite {
        Suite::Approx => approx::run(cfg, settings.jobs)?,
        Suite::Estimate => estimate::run(cfg, settings.jobs)?,
        Suite::Baseline => baseline::run(cfg, settings.jobs)?,
        Suite::Bounds => bounds::run(cfg, settings.jobs)?,
        Suite::Bqp => bqp::run(cfg, settings.jobs)?,
        Suite::Apps => apps::run(cfg, settings.jobs)?,
        Suite::Separation => separation::run(cfg, settings.jobs)?,
    };
    finish(cfg, settings, header, specs, graded, checks)
}

/// Type-erased result of one suite: header, specs and graded outcomes, checks.
pub(crate) type Erased = (Vec<&'static str>, Vec<InstanceSpec>, Vec<Result<Outcome<()>>>, Vec<Check>);

pub(crate) fn erase<P>(header: &[&'static str], collected: Collected<P>, checks: Vec<Check>) -> Erased {
    let outcomes = collected
        .outcomes
        .into_iter()
        .map(|o| o.map(|o| Outcome { report: o.report, pass: o.pass, rows: o.rows, data: () }))
        .collect();
    (header.to_vec(), collected.specs, outcomes, checks)
}

fn finish(
    cfg: &ResolvedConfig,
    settings: &RunSettings,
    header: Vec<&'static str>,
    specs: Vec<InstanceSpec>,
    outcomes: Vec<Result<Outcome<()>>>,
    checks: Vec<Check>,
) -> Result<SuiteRun> {
    let hash = cfg.hash();
    let timestamp = unix_time();
    let mut table = Table::new(&header);
    let mut records = Vec::with_capacity(specs.len());
    for (index, (spec, outcome)) in specs.into_iter().zip(outcomes).enumerate() {
        let (report, pass, error) = match outcome {
            Ok(o) => {
                o.rows.into_iter().for_each(|r| table.push(r));
                (o.report, o.pass, None)
            }
            Err(e) => (Value::Null, None, Some(format!("{e:#}"))),
        };
        records.push(RunRecord {
            record_index: index,
            spec,
            report,
            pass,
            error,
            timestamp,
            tool_version: TOOL_VERSION.to_owned(),
            config_hash: hash.clone(),
        });
    }
    let errors = records.iter().filter(|r| r.error.is_some()).count();
    let graded = records.iter().filter(|r| r.pass.is_some()).count();
    let passed = records.iter().filter(|r| r.pass == Some(true)).count();
    let pass_fraction = (graded > 0).then(|| passed as f64 / graded as f64);
    let ok = errors == 0 && checks.iter().all(|c| c.pass) && pass_fraction.is_none_or(|f| f >= cfg.pass_threshold);
    let summary = Summary {
        suite: cfg.suite,
        config_hash: hash.clone(),
        config: cfg.clone(),
        records: records.len(),
        errors,
        graded,
        passed,
        pass_fraction,
        pass_threshold: cfg.pass_threshold,
        checks,
        ok,
        tool_version: TOOL_VERSION.to_owned(),
    };
    let dir = output_dir(&settings.out, cfg.suite.name(), &hash);
    write_atomic(&dir.join("records.json"), &canonical_json(&records)?)?;
    write_atomic(&dir.join("table.csv"), &table.to_csv()?)?;
    write_atomic(&dir.join("summary.json"), &canonical_json(&summary)?)?;
    Ok(SuiteRun { summary, records, table, dir })
}
