//! Running one configuration and reproducing a manifest.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use serde::Serialize;

use crate::config::{Check, Manifest, RunConfig};
use crate::error::{CliError, CliResult};
use crate::experiments::{dispatch, write_json, Metrics};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub criterion: String,
    pub metric: String,
    pub value: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub pass: bool,
}

impl CheckResult {
    fn evaluate(c: &Check, value: Option<f64>) -> Self {
        let pass = value.is_some_and(|v| {
            !v.is_nan() && c.min.map_or(true, |lo| v >= lo) && c.max.map_or(true, |hi| v <= hi)
        });
        CheckResult { criterion: c.criterion.clone(), metric: c.metric.clone(), value, min: c.min, max: c.max, pass }
    }

    pub fn describe(&self) -> String {
        let value = self.value.map_or("missing".to_string(), |v| format!("{v:.6e}"));
        let mut bounds = Vec::new();
        if let Some(lo) = self.min {
            bounds.push(format!(">= {lo:e}"));
        }
        if let Some(hi) = self.max {
            bounds.push(format!("<= {hi:e}"));
        }
        format!("{} = {value} (required {})", self.metric, bounds.join(", "))
    }
}

/// Contents of `summary.json`: deterministic given the config.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub name: Option<String>,
    pub kind: String,
    pub pass: bool,
    pub metrics: Metrics,
    pub checks: Vec<CheckResult>,
}

/// Contents of `timing.json`: wall-clock measurements and their checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Timing {
    pub runtime_s: f64,
    pub workers: usize,
    pub checks: Vec<CheckResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutcome {
    pub summary: Summary,
    pub timing: Timing,
}

impl RunOutcome {
    pub fn pass(&self) -> bool {
        self.summary.pass && self.timing.checks.iter().all(|c| c.pass)
    }

    pub fn checks(&self) -> impl Iterator<Item = &CheckResult> {
        self.summary.checks.iter().chain(&self.timing.checks)
    }
}

fn pool(workers: Option<usize>) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Io(format!("cannot start the work pool: {e}")))
}

/// Validates, runs and writes `manifest.json`, the experiment outputs,
/// `summary.json` and `timing.json` into `out`.
pub fn run(cfg: &RunConfig, out: &Path) -> CliResult<RunOutcome> {
    cfg.validate()?;
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    write_json(out, "manifest.json", cfg)?;
    let pool = pool(cfg.workers)?;
    let start = Instant::now();
    let metrics = pool.install(|| dispatch(cfg, out))?;
    let runtime_s = start.elapsed().as_secs_f64();

    let mut checks = Vec::new();
    let mut timed = Vec::new();
    for c in &cfg.checks {
        if c.metric == "runtime_s" {
            timed.push(CheckResult::evaluate(c, Some(runtime_s)));
        } else {
            checks.push(CheckResult::evaluate(c, metrics.get(&c.metric).copied()));
        }
    }
    let summary = Summary {
        name: cfg.name.clone(),
        kind: cfg.kind.name().to_string(),
        pass: checks.iter().all(|c| c.pass),
        metrics,
        checks,
    };
    let timing = Timing { runtime_s, workers: pool.current_num_threads(), checks: timed };
    write_json(out, "summary.json", &summary)?;
    write_json(out, "timing.json", &timing)?;
    Ok(RunOutcome { summary, timing })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunEntry {
    pub name: String,
    pub pass: bool,
    pub error: Option<String>,
    pub status: i32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionResult {
    pub pass: bool,
    pub runs: Vec<String>,
    pub checks: Vec<CheckResult>,
    pub errors: Vec<String>,
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub pass: bool,
    pub runs: Vec<RunEntry>,
    pub criteria: BTreeMap<String, CriterionResult>,
    /// Criteria with a failed check or an erroring run.
    pub failures: Vec<String>,
}

impl Report {
    /// 0 when everything passed, the status of the first erroring run,
    /// otherwise 1.
    pub fn status(&self) -> i32 {
        if self.pass {
            0
        } else {
            self.runs.iter().find(|r| r.error.is_some()).map_or(1, |r| r.status)
        }
    }

    /// One `PASS`/`FAIL` line per criterion with the measured values.
    pub fn lines(&self) -> Vec<String> {
        self.criteria
            .iter()
            .map(|(name, c)| {
                let mut parts: Vec<String> = c.checks.iter().map(|k| k.describe()).collect();
                parts.extend(c.errors.iter().cloned());
                format!("{} {name}: {}", if c.pass { "PASS" } else { "FAIL" }, parts.join("; "))
            })
            .collect()
    }
}

/// Runs every entry of the manifest into `out/<name>` and writes
/// `out/report.json`. Configuration errors abort before any run starts.
pub fn reproduce_all(manifest: &Manifest, out: &Path) -> CliResult<Report> {
    manifest.validate()?;
    std::fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let mut runs = Vec::new();
    let mut criteria: BTreeMap<String, CriterionResult> = BTreeMap::new();
    for cfg in &manifest.runs {
        let name = cfg.name.clone().expect("validated");
        let entry = |c: &str, criteria: &mut BTreeMap<String, CriterionResult>| {
            criteria.entry(c.to_string()).or_insert_with(|| CriterionResult {
                pass: true,
                runs: Vec::new(),
                checks: Vec::new(),
                errors: Vec::new(),
            });
        };
        match run(cfg, &out.join(&name)) {
            Ok(outcome) => {
                for c in outcome.checks() {
                    entry(&c.criterion, &mut criteria);
                    let r = criteria.get_mut(&c.criterion).expect("inserted");
                    r.pass &= c.pass;
                    if !r.runs.contains(&name) {
                        r.runs.push(name.clone());
                    }
                    r.checks.push(c.clone());
                }
                runs.push(RunEntry { name, pass: outcome.pass(), error: None, status: 0 });
            }
            Err(e) => {
                let msg = format!("run `{name}` failed: {e}");
                for c in &cfg.checks {
                    entry(&c.criterion, &mut criteria);
                    let r = criteria.get_mut(&c.criterion).expect("inserted");
                    r.pass = false;
                    if !r.errors.contains(&msg) {
                        r.errors.push(msg.clone());
                        r.runs.push(name.clone());
                    }
                }
                runs.push(RunEntry { name, pass: false, error: Some(e.to_string()), status: e.status() });
            }
        }
    }
    let failures: Vec<String> = criteria.iter().filter(|(_, c)| !c.pass).map(|(k, _)| k.clone()).collect();
    let report = Report { pass: runs.iter().all(|r| r.pass), runs, criteria, failures };
    write_json(out, "report.json", &report)?;
    Ok(report)
}
