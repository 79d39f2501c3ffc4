//! Command-line front end: training, evaluation, extraction, multi-seed
//! experiments, sweeps, task generation and gradient checking.
//!
//! The exit status is nonzero when a command fails or when a gate it
//! evaluates (success threshold, gradient check) is not met.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use protoilp::extraction::{audit_json, extract_program, symbolic_evaluate, SUCCESS_MSE};
use protoilp::harness::{report_json, run_experiment, sweep, sweep_csv, Grid};
use protoilp::inference::{run_inference, Instance};
use protoilp::model::{load_checkpoint, save_checkpoint, Model};
use protoilp::tasks::{generate_task, load_task, save_task, IlpTask, TaskName, TaskSpec};
use protoilp::training::{
    check_gradients, parse_config, train, write_log_csv, ConfigFile, GradCheckOptions, TaskSource,
};

#[derive(Parser)]
#[command(name = "protoilp", version, about = "Differentiable rule induction with proto-rules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model and save a checkpoint.
    Train {
        #[arg(long)]
        task: TaskName,
        /// `key = value` configuration overriding the task defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Train on a fixed JSON task instead of generated instances.
        #[arg(long)]
        task_file: Option<PathBuf>,
        #[arg(long, default_value = "model.json")]
        out: PathBuf,
        /// Training log as CSV.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on a fresh evaluation instance.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        task: Option<TaskName>,
        #[arg(long)]
        task_file: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        seed: u64,
        /// Evaluate the extracted program instead of soft inference.
        #[arg(long)]
        symbolic: bool,
    },
    /// Print the symbolic program held by a checkpoint.
    Extract {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Print the per-slot audit as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Train and evaluate several seeds; prints a Markdown report.
    Experiment {
        #[arg(long)]
        task: TaskName,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        /// Seeds run from here upwards.
        #[arg(long, default_value_t = 0)]
        first_seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        eval_repeats: usize,
        /// Required percentage of soft and symbolic successes.
        #[arg(long)]
        gate: Option<f64>,
        /// Also write the report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run one experiment per cell of a grid such as `recursivity=none,full;max-depth=1,4`.
    Sweep {
        #[arg(long)]
        task: TaskName,
        #[arg(long)]
        grid: String,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        /// Seeds run from here upwards.
        #[arg(long, default_value_t = 0)]
        first_seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        eval_repeats: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a task instance as JSON.
    GenTask {
        #[arg(long)]
        task: TaskName,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare analytic and finite-difference gradients.
    CheckGrad {
        #[arg(long, default_value = "grandparent")]
        task: TaskName,
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 2)]
        steps: usize,
        #[arg(long, default_value_t = 40)]
        coordinates: usize,
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn load_config(task: TaskName, path: Option<&PathBuf>) -> Result<ConfigFile> {
    let base = ConfigFile::for_task(task);
    match path {
        None => Ok(base),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(parse_config(&text, base)?)
        }
    }
}

fn eval_task(task: Option<TaskName>, file: Option<&PathBuf>, stored: Option<&str>, cfg_path: Option<&PathBuf>, seed: u64) -> Result<(IlpTask, ConfigFile)> {
    if let Some(f) = file {
        let t = load_task(f)?;
        let name: Option<TaskName> = task.or_else(|| stored.and_then(|s| s.parse().ok()));
        let cfg = match name {
            Some(n) => load_config(n, cfg_path)?,
            None => bail!("--task is needed to pick evaluation defaults"),
        };
        return Ok((t, cfg));
    }
    let name = match (task, stored) {
        (Some(t), _) => t,
        (None, Some(s)) => s.parse()?,
        (None, None) => bail!("the checkpoint names no task; pass --task or --task-file"),
    };
    let cfg = load_config(name, cfg_path)?;
    Ok((generate_task(&TaskSpec::new(name, cfg.eval_constants, seed))?, cfg))
}

fn print_program(model: &Model<f64>) -> Result<()> {
    let ex = extract_program(model)?;
    print!("{}", ex.program);
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Train { task, config, seed, task_file, out, log } => {
            let cfg = load_config(task, config.as_ref())?;
            let mut tc = cfg.train.clone();
            tc.seed = seed;
            let source = match task_file {
                Some(f) => TaskSource::Fixed(load_task(f)?),
                None => TaskSource::Generated { name: task, seed },
            };
            let outcome = train::<f64>(&source, &cfg.model, &tc)?;
            save_checkpoint(&outcome.model, Some(task.as_str()), &out)?;
            if let Some(path) = log {
                write_log_csv(&outcome.log, std::fs::File::create(&path)?)?;
            }
            println!("train mse {:.3e}", outcome.train_mse);
            print_program(&outcome.model)?;
            Ok(true)
        }
        Command::Eval { checkpoint, task, task_file, config, seed, symbolic } => {
            let (model, stored) = load_checkpoint::<f64>(&checkpoint)?;
            let (t, cfg) = eval_task(task, task_file.as_ref(), stored.as_deref(), config.as_ref(), seed)?;
            let mse = if symbolic {
                let ex = extract_program(&model)?;
                let bound = t.constants.len().pow(2) * (t.predicates.len() + model.aux.len() + 1) + 1;
                symbolic_evaluate(&ex, &t, bound)?.mse
            } else {
                let inst = Instance::new(&t, model.inputs())?;
                let state = run_inference(&model, &inst, cfg.eval_steps)?;
                inst.mse(&state.target)
            };
            let ok = mse < SUCCESS_MSE;
            println!("{} mse {:.3e}: {}", if symbolic { "symbolic" } else { "soft" }, mse, if ok { "success" } else { "failure" });
            Ok(ok)
        }
        Command::Extract { checkpoint, json } => {
            let (model, _) = load_checkpoint::<f64>(&checkpoint)?;
            if json {
                println!("{}", audit_json(&extract_program(&model)?)?);
            } else {
                print_program(&model)?;
            }
            Ok(true)
        }
        Command::Experiment { task, seeds, first_seed, config, eval_repeats, gate, json } => {
            let cfg = load_config(task, config.as_ref())?;
            let seeds: Vec<u64> = (first_seed..first_seed + seeds).collect();
            let report = run_experiment(task, &seeds, &cfg, eval_repeats)?;
            print!("{}", report.to_markdown());
            if let Some(path) = json {
                std::fs::write(path, report_json(&report)?)?;
            }
            Ok(gate.map_or(true, |g| report.summary.soft >= g && report.summary.symbolic >= g))
        }
        Command::Sweep { task, grid, seeds, first_seed, config, eval_repeats, out } => {
            let cfg = load_config(task, config.as_ref())?;
            let grid = Grid::parse(&grid)?;
            let seeds: Vec<u64> = (first_seed..first_seed + seeds).collect();
            let cells = sweep(task, &grid, &seeds, &cfg, eval_repeats)?;
            let csv = sweep_csv(&cells)?;
            match out {
                Some(p) => std::fs::write(p, &csv)?,
                None => print!("{csv}"),
            }
            Ok(true)
        }
        Command::GenTask { task, n, seed, out } => {
            let t = generate_task(&TaskSpec::new(task, n, seed))?;
            save_task(&t, &out)?;
            println!(
                "{}: {} constants, {} positives, {} negatives",
                out.display(),
                t.constants.len(),
                t.positives.len(),
                t.negatives.len()
            );
            Ok(true)
        }
        Command::CheckGrad { task, n, steps, coordinates, tolerance, seed } => {
            let cfg = ConfigFile::for_task(task);
            let t = generate_task(&TaskSpec::new(task, n, seed))?;
            let model = protoilp::model::build_model::<f64>(&cfg.model, &t.predicates, &t.target, seed)?;
            let inst = Instance::new(&t, model.inputs())?;
            let options = GradCheckOptions {
                coordinates,
                tolerance,
                steps,
                seed,
                ..GradCheckOptions::default()
            };
            let report = check_gradients(&model, &inst, &options)?;
            println!(
                "{} coordinates, max relative error {:.3e}, attempts {}: {}",
                report.checks.len(),
                report.max_rel_error,
                report.attempts,
                if report.passed { "pass" } else { "fail" }
            );
            Ok(report.passed)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
