//! Multi-seed experiments: train, evaluate softly and symbolically on fresh
//! instances, aggregate success rates, and sweep hyperparameter grids.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::extraction::{extract_program, symbolic_evaluate, SUCCESS_MSE};
use crate::inference::{run_inference, Instance};
use crate::model::Model;
use crate::tasks::{generate_task, IlpTask, TaskName, TaskSpec};
use crate::training::{train, ConfigFile, TaskSource};
use crate::{Error, Result};

/// Environment variable holding the worker count for seeds and grid cells.
pub const WORKERS_ENV: &str = "PROTOILP_WORKERS";

/// Outcome of one seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub task: String,
    pub seed: u64,
    pub train_mse: f64,
    pub soft_eval_mse: f64,
    pub symbolic_eval_mse: f64,
    pub train_success: bool,
    pub soft_success: bool,
    pub symbolic_success: bool,
    pub wall_time: f64,
    pub program: String,
    /// Smallest winning score over the slots of the extracted program.
    pub min_chosen_alpha: f64,
    /// Set when the run aborted; all success flags are then false.
    pub error: Option<String>,
}

impl RunRecord {
    fn failed(task: TaskName, seed: u64, error: String, wall_time: f64) -> Self {
        Self {
            task: task.as_str().into(),
            seed,
            train_mse: f64::NAN,
            soft_eval_mse: f64::NAN,
            symbolic_eval_mse: f64::NAN,
            train_success: false,
            soft_success: false,
            symbolic_success: false,
            wall_time,
            program: String::new(),
            min_chosen_alpha: f64::NAN,
            error: Some(error),
        }
    }
}

/// Success percentages over seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seeds: usize,
    pub train: f64,
    pub soft: f64,
    pub symbolic: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub task: String,
    pub config: ConfigFile,
    /// Hash of the configuration and evaluation protocol.
    pub fingerprint: String,
    pub runs: Vec<RunRecord>,
    pub summary: Summary,
}

fn pct(k: usize, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        100.0 * k as f64 / n as f64
    }
}

impl ExperimentReport {
    pub fn new(task: TaskName, config: &ConfigFile, eval_repeats: usize, runs: Vec<RunRecord>) -> Self {
        let n = runs.len();
        let count = |f: fn(&RunRecord) -> bool| runs.iter().filter(|r| f(r)).count();
        let summary = Summary {
            seeds: n,
            train: pct(count(|r| r.train_success), n),
            soft: pct(count(|r| r.soft_success), n),
            symbolic: pct(count(|r| r.symbolic_success), n),
        };
        Self {
            task: task.as_str().into(),
            fingerprint: fingerprint(task, config, eval_repeats),
            config: config.clone(),
            runs,
            summary,
        }
    }

    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "## {} (config `{}`)\n", self.task, self.fingerprint);
        let _ = writeln!(s, "| task | seeds | train | soft evaluation | symbolic evaluation |");
        let _ = writeln!(s, "|---|---|---|---|---|");
        let m = &self.summary;
        let _ = writeln!(
            s,
            "| {} | {} | {:.0} | {:.0} | {:.0} |\n",
            self.task, m.seeds, m.train, m.soft, m.symbolic
        );
        let _ = writeln!(s, "| seed | train mse | soft mse | symbolic mse | time (s) | program |");
        let _ = writeln!(s, "|---|---|---|---|---|---|");
        for r in &self.runs {
            let program = match &r.error {
                Some(e) => format!("error: {e}"),
                None => r.program.trim().replace('\n', "<br>"),
            };
            let _ = writeln!(
                s,
                "| {} | {:.2e} | {:.2e} | {:.2e} | {:.1} | `{}` |",
                r.seed, r.train_mse, r.soft_eval_mse, r.symbolic_eval_mse, r.wall_time, program
            );
        }
        s
    }
}

/// The report as pretty-printed JSON.
pub fn report_json(report: &ExperimentReport) -> Result<String> {
    serde_json::to_string_pretty(report).map_err(|e| Error::InvalidConfig(format!("report serialisation: {e}")))
}

/// Short SHA-256 digest of the task, configuration and evaluation repeats.
pub fn fingerprint(task: TaskName, config: &ConfigFile, eval_repeats: usize) -> String {
    let mut h = Sha256::new();
    h.update(task.as_str().as_bytes());
    h.update(serde_json::to_vec(config).expect("config serialises"));
    h.update(eval_repeats.to_le_bytes());
    h.finalize()[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Evaluation instances for one seed. Arithmetic tasks have a single one.
pub fn eval_tasks(task: TaskName, seed: u64, config: &ConfigFile, repeats: usize) -> Result<Vec<IlpTask>> {
    let repeats = if task.is_deterministic() { 1 } else { repeats.max(1) };
    (0..repeats)
        .map(|r| {
            let s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (0xE7A1_0000 + r as u64);
            generate_task(&TaskSpec::new(task, config.eval_constants, s))
        })
        .collect()
}

/// Soft and symbolic evaluation of a trained model.
pub fn evaluate_model(model: &Model<f64>, tasks: &[IlpTask], eval_steps: usize) -> Result<(f64, f64, String, f64)> {
    let extraction = extract_program(model)?;
    let mut soft = 0.0;
    let mut sym = 0.0;
    for t in tasks {
        let inst = Instance::new(t, model.inputs())?;
        let state = run_inference(model, &inst, eval_steps)?;
        soft += inst.mse(&state.target);
        let bound = t.constants.len().pow(2) * (t.predicates.len() + model.aux.len() + 1) + 1;
        sym += symbolic_evaluate(&extraction, t, bound)?.mse;
    }
    let k = tasks.len().max(1) as f64;
    let used: Vec<&str> = extraction.renamed.iter().map(|(a, _)| a.as_str()).collect();
    let min_alpha = extraction
        .slot_assignments
        .iter()
        .filter(|a| a.owner == model.target.name || used.contains(&a.owner.as_str()))
        .map(|a| a.alpha)
        .fold(1.0, f64::min);
    Ok((soft / k, sym / k, extraction.program.to_string(), min_alpha))
}

/// Trains and evaluates one seed; errors are recorded, not returned.
pub fn run_seed(task: TaskName, seed: u64, config: &ConfigFile, eval_repeats: usize) -> RunRecord {
    let start = Instant::now();
    let attempt = || -> Result<RunRecord> {
        let mut cfg = config.train.clone();
        cfg.seed = seed;
        let outcome = train::<f64>(&TaskSource::Generated { name: task, seed }, &config.model, &cfg)?;
        let tasks = eval_tasks(task, seed, config, eval_repeats)?;
        let (soft, sym, program, min_alpha) = evaluate_model(&outcome.model, &tasks, config.eval_steps)?;
        Ok(RunRecord {
            task: task.as_str().into(),
            seed,
            train_mse: outcome.train_mse,
            soft_eval_mse: soft,
            symbolic_eval_mse: sym,
            train_success: outcome.train_mse < SUCCESS_MSE,
            soft_success: soft < SUCCESS_MSE,
            symbolic_success: sym < SUCCESS_MSE,
            wall_time: start.elapsed().as_secs_f64(),
            program,
            min_chosen_alpha: min_alpha,
            error: None,
        })
    };
    attempt().unwrap_or_else(|e| RunRecord::failed(task, seed, e.to_string(), start.elapsed().as_secs_f64()))
}

/// Worker count from [`WORKERS_ENV`], defaulting to the available cores.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

fn pool() -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| Error::InvalidConfig(format!("worker pool: {e}")))
}

/// Runs every seed (in parallel) and aggregates the three success rates.
pub fn run_experiment(task: TaskName, seeds: &[u64], config: &ConfigFile, eval_repeats: usize) -> Result<ExperimentReport> {
    config.validate()?;
    let runs = pool()?.install(|| {
        seeds
            .par_iter()
            .map(|&s| run_seed(task, s, config, eval_repeats))
            .collect::<Vec<_>>()
    });
    Ok(ExperimentReport::new(task, config, eval_repeats, runs))
}

/// A hyperparameter grid: each axis is a config key with candidate values.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub axes: Vec<(String, Vec<String>)>,
}

impl Grid {
    /// Parses `key=v1,v2;key2=v3`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut axes = Vec::new();
        for part in text.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, vs) = part
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("grid axis `{part}` lacks `=`")))?;
            let values: Vec<String> = vs.split(',').map(|v| v.trim().to_string()).filter(|v| !v.is_empty()).collect();
            if values.is_empty() {
                return Err(Error::InvalidConfig(format!("grid axis `{k}` has no values")));
            }
            axes.push((k.trim().to_string(), values));
        }
        Ok(Self { axes })
    }

    /// Every combination, as lists of `(key, value)` settings.
    pub fn cells(&self) -> Vec<Vec<(String, String)>> {
        let mut out: Vec<Vec<(String, String)>> = vec![Vec::new()];
        for (k, vs) in &self.axes {
            out = out
                .into_iter()
                .flat_map(|cell| {
                    vs.iter().map(move |v| {
                        let mut c = cell.clone();
                        c.push((k.clone(), v.clone()));
                        c
                    })
                })
                .collect();
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub settings: Vec<(String, String)>,
    pub report: ExperimentReport,
}

/// One experiment per grid cell, each on top of `base`.
pub fn sweep(task: TaskName, grid: &Grid, seeds: &[u64], base: &ConfigFile, eval_repeats: usize) -> Result<Vec<SweepCell>> {
    let mut configs = Vec::new();
    for cell in grid.cells() {
        let mut cfg = base.clone();
        for (k, v) in &cell {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        configs.push((cell, cfg));
    }
    let jobs: Vec<(usize, u64)> = (0..configs.len())
        .flat_map(|c| seeds.iter().map(move |&s| (c, s)))
        .collect();
    let runs = pool()?.install(|| {
        jobs.par_iter()
            .map(|&(c, s)| (c, run_seed(task, s, &configs[c].1, eval_repeats)))
            .collect::<Vec<_>>()
    });
    Ok(configs
        .into_iter()
        .enumerate()
        .map(|(i, (settings, cfg))| {
            let cell_runs = runs.iter().filter(|(c, _)| *c == i).map(|(_, r)| r.clone()).collect();
            SweepCell {
                settings,
                report: ExperimentReport::new(task, &cfg, eval_repeats, cell_runs),
            }
        })
        .collect())
}

/// One CSV row per grid cell with the three success percentages.
pub fn sweep_csv(cells: &[SweepCell]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["task", "settings", "fingerprint", "seeds", "train", "soft", "symbolic"])?;
    for c in cells {
        let settings: Vec<String> = c.settings.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let s = &c.report.summary;
        w.write_record([
            c.report.task.clone(),
            settings.join(";"),
            c.report.fingerprint.clone(),
            s.seeds.to_string(),
            format!("{:.0}", s.train),
            format!("{:.0}", s.soft),
            format!("{:.0}", s.symbolic),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}
