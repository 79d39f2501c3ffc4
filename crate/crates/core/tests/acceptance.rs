//! Acceptance suite: one line per criterion, nonzero exit if any gated
//! criterion fails. Runs as a plain binary so the lines always print.

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use protoilp::extraction::{evaluate_program, extract_from_scores, ExtractOptions, SUCCESS_MSE};
use protoilp::harness::run_experiment;
use protoilp::inference::{compute_scores, forward, run_inference, Instance, OperatorConfig};
use protoilp::logic::{forward_chain_with, parse_program, ChainOptions, GroundAtom, FALSE, TRUE};
use protoilp::model::{build_model, ModelConfig, Recursivity};
use protoilp::tasks::{generate_task, IlpTask, TaskName, TaskSpec};
use protoilp::training::{check_gradients, gumbel_noise, ConfigFile, GradCheckOptions, GumbelVariant};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Hand-written solutions in this crate's task encodings.
const SOLUTIONS: &[(TaskName, &str)] = &[
    (TaskName::Predecessor, "target(X,Y) :- succ(Y,X)."),
    (TaskName::UndirectedEdge, "target(X,Y) :- edge(X,Y).\ntarget(X,Y) :- edge(Y,X)."),
    (TaskName::LessThan, "target(X,Y) :- succ(X,Y).\ntarget(X,Y) :- target(X,Z), target(Z,Y)."),
    (TaskName::Member, "target(X,Y) :- value(X,Y).\ntarget(X,Y) :- target(X,Z), cons(Z,Y)."),
    (TaskName::Connectedness, "target(X,Y) :- edge(X,Y).\ntarget(X,Y) :- target(X,Z), target(Z,Y)."),
    (
        TaskName::Son,
        "target(X,Y) :- aux1(X), father(Y,X).\naux1(X) :- father(X,Z).\naux1(X) :- brother(X,Z).",
    ),
    (
        TaskName::Grandparent,
        "target(X,Y) :- aux1(X,Z), aux1(Z,Y).\naux1(X,Y) :- mother(X,Y).\naux1(X,Y) :- father(X,Y).",
    ),
    (TaskName::AdjacentToRed, "target(X) :- edge(X,Z), aux1(Z).\naux1(X) :- colour(X,Z), red(Z)."),
    (TaskName::TwoChildren, "target(X) :- edge(X,Y), aux1(X,Y).\naux1(X,Y) :- edge(X,Z), neq(Z,Y)."),
    (
        TaskName::Relatedness,
        "target(X,Y) :- parent(X,Y).\ntarget(X,Y) :- parent(Y,X).\ntarget(X,Y) :- target(X,Z), target(Z,Y).",
    ),
    (TaskName::Cyclic, "target(X) :- aux1(X,Z), aux1(Z,X).\naux1(X,Y) :- edge(X,Y).\naux1(X,Y) :- aux1(X,Z), edge(Z,Y)."),
    (TaskName::GraphColoring, "target(X,Y) :- edge(X,Y), aux1(X,Y).\naux1(X,Y) :- colour(X,Z), colour(Y,Z)."),
    (
        TaskName::EvenOdd,
        "target(X) :- zero(X).\ntarget(X) :- target(Y), aux1(Y,X).\naux1(X,Y) :- succ(X,Z), succ(Z,Y).",
    ),
    (
        TaskName::EvenSucc2,
        "target(X) :- zero(X).\ntarget(X) :- target(Y), aux1(Y,X).\naux1(X,Y) :- succ(X,Z), succ(Z,Y).",
    ),
    (TaskName::Buzz, "target(X) :- zero(X).\ntarget(X) :- target(Y), aux1(Y,X).\naux1(X,Y) :- pred1(X,Z), pred2(Z,Y)."),
];

struct Line {
    id: &'static str,
    gated: bool,
    passed: bool,
    detail: String,
}

fn eval_task(name: TaskName, seed: u64) -> IlpTask {
    generate_task(&TaskSpec::new(name, name.profile().eval_constants, seed)).expect("generator")
}

/// Oracle solutions label every example correctly at evaluation sizes.
fn criterion_1() -> Line {
    let mut failures = Vec::new();
    let mut checked = 0;
    for &(name, text) in SOLUTIONS {
        let seeds = if name.is_deterministic() { 1 } else { 5 };
        for seed in 0..seeds {
            let task = eval_task(name, seed);
            let program = parse_program(text, task.target.clone()).expect("solution parses");
            let eval = evaluate_program(&program, &task, 10_000).expect("chaining");
            checked += 1;
            if eval.mse != 0.0 || !eval.fixpoint {
                failures.push(format!("{name}#{seed} mse {}", eval.mse));
            }
        }
    }
    Line {
        id: "1 oracle solutions",
        gated: true,
        passed: failures.is_empty(),
        detail: format!("{} tasks, {checked} instances, mse == 0 required; failures: {failures:?}", SOLUTIONS.len()),
    }
}

/// Slot choices (owner, position, predicate) realising a known program.
fn one_hot_choices(name: TaskName) -> Vec<(&'static str, usize, &'static str)> {
    match name {
        TaskName::Predecessor => vec![("l4_i0", 0, "succ"), ("target", 0, "l4_i0")],
        TaskName::Grandparent => vec![
            ("l1_c0", 0, "mother"),
            ("l1_c0", 1, "true"),
            ("l1_c0", 2, "father"),
            ("l4_b0", 0, "l1_c0"),
            ("l4_b0", 1, "l1_c0"),
            ("target", 0, "l4_b0"),
        ],
        TaskName::AdjacentToRed => vec![
            ("l1_a0", 0, "colour"),
            ("l1_a0", 1, "red"),
            ("l4_a0", 0, "edge"),
            ("l4_a0", 1, "l1_a0"),
            ("target", 0, "l4_a0"),
        ],
        TaskName::Member => vec![
            ("l4_b0", 0, "l4_b0"),
            ("l4_b0", 1, "cons"),
            ("l4_b0", 2, "value"),
            ("target", 0, "l4_b0"),
        ],
        TaskName::Connectedness => vec![
            ("l4_b0", 0, "l4_b0"),
            ("l4_b0", 1, "l4_b0"),
            ("l4_b0", 2, "edge"),
            ("target", 0, "l4_b0"),
        ],
        _ => unreachable!(),
    }
}

/// One-hot embeddings reproduce the truncated symbolic chaining exactly.
fn criterion_2() -> Line {
    let tasks = [
        TaskName::Predecessor,
        TaskName::Grandparent,
        TaskName::AdjacentToRed,
        TaskName::Member,
        TaskName::Connectedness,
    ];
    let mut failures = Vec::new();
    let mut atoms = 0usize;
    let mut true_atoms = 0usize;
    for name in tasks {
        for seed in 0..3 {
            let task = eval_task(name, seed);
            let cfg = ModelConfig { temperature: 1e-3, ..ModelConfig::default() };
            let mut model = build_model::<f64>(&cfg, &task.predicates, &task.target, seed).unwrap();
            model.align_one_hot(&one_hot_choices(name)).unwrap();
            let steps = name.profile().eval_steps;
            let inst = Instance::new(&task, model.inputs()).unwrap();
            let soft = run_inference(&model, &inst, steps).unwrap();
            let scores = compute_scores(&model, None).unwrap();
            let program = extract_from_scores(&model, &scores, ExtractOptions { unfold: false }).program;
            let options = ChainOptions { declared: task.predicates.clone(), equal: false };
            let derived = forward_chain_with(&program, &task.background, &task.constants, steps, &options)
                .unwrap()
                .atoms;
            let n = task.constants.len();
            for (off, &v) in soft.target.iter().enumerate() {
                let args: Vec<&str> = match task.target.arity() {
                    1 => vec![task.constants[off].as_str()],
                    _ => vec![task.constants[off / n].as_str(), task.constants[off % n].as_str()],
                };
                let crisp = if derived.contains(&GroundAtom::new("target", &args)) { 1.0 } else { 0.0 };
                atoms += 1;
                true_atoms += (v == 1.0) as usize;
                if v != crisp {
                    failures.push(format!("{name}#{seed} {args:?}: soft {v} vs {crisp}"));
                }
            }
        }
    }
    failures.truncate(5);
    Line {
        id: "2 one-hot equivalence",
        gated: true,
        passed: failures.is_empty() && true_atoms > 0,
        detail: format!(
            "{} tasks x 3 instances, {atoms} target atoms compared exactly ({true_atoms} true); mismatches: {failures:?}",
            tasks.len()
        ),
    }
}

/// Analytic gradients match central differences.
fn criterion_3() -> Line {
    let tasks = [TaskName::Grandparent, TaskName::AdjacentToRed, TaskName::Member, TaskName::Connectedness];
    let mut total = 0;
    let mut worst: f64 = 0.0;
    let mut ok = true;
    let mut notes = Vec::new();
    for (i, name) in tasks.into_iter().enumerate() {
        let task = generate_task(&TaskSpec::new(name, 5, i as u64)).unwrap();
        let model = build_model::<f64>(&ModelConfig::default(), &task.predicates, &task.target, 17 + i as u64).unwrap();
        let inst = Instance::new(&task, model.inputs()).unwrap();
        let options = GradCheckOptions { coordinates: 30, steps: 3, seed: i as u64, ..GradCheckOptions::default() };
        let report = check_gradients(&model, &inst, &options).unwrap();
        total += report.checks.len();
        worst = worst.max(report.max_rel_error);
        ok &= report.passed;
        notes.push(format!("{name}: {:.1e}", report.max_rel_error));
    }
    Line {
        id: "3 gradient check",
        gated: true,
        passed: ok && total >= 100,
        detail: format!(
            "{total} coordinates over {} tasks, h = 1e-5, tie tolerance 1e-6, max relative error {worst:.2e} (limit 1e-4) [{}]",
            tasks.len(),
            notes.join(", ")
        ),
    }
}

/// Valuations in [0, 1], non-decreasing over steps, for all ablation operators.
fn criterion_4() -> Line {
    let mut runner = TestRunner::new(PropConfig { cases: 48, failure_persistence: None, ..PropConfig::default() });
    let names = vec![
        TaskName::Grandparent,
        TaskName::AdjacentToRed,
        TaskName::Member,
        TaskName::Cyclic,
        TaskName::Son,
        TaskName::EvenOdd,
    ];
    let strategy = (prop::sample::select(names), 0u64..1_000_000, 4usize..7, any::<bool>());
    let result = runner.run(&strategy, |(name, seed, n, noisy)| {
        let task = generate_task(&TaskSpec::new(name, n, seed)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for ops in OperatorConfig::ablation_set() {
            let cfg = ModelConfig { operators: ops, ..ModelConfig::default() };
            let model = build_model::<f64>(&cfg, &task.predicates, &task.target, seed).unwrap();
            let mut inst = Instance::new(&task, model.inputs()).unwrap();
            for (p, v) in model.inputs().iter().zip(inst.inputs.iter_mut()) {
                if p.name != TRUE && p.name != FALSE {
                    v.iter_mut().for_each(|x| *x = rng.gen_range(0.0..=1.0));
                }
            }
            let noise = noisy.then(|| gumbel_noise(&model, 0.3, GumbelVariant::Standard, &mut rng));
            let scores = compute_scores(&model, noise.as_deref()).unwrap();
            let trace = forward(&model, &scores, &inst, 4, false);
            for (k, s) in trace.states.iter().enumerate() {
                let all = s.values.iter().flatten().chain(&s.target);
                prop_assert!(all.clone().all(|v| (0.0..=1.0).contains(v)), "{ops:?}: out of range at step {k}");
                if k > 0 {
                    let p = &trace.states[k - 1];
                    let prev = p.values.iter().flatten().chain(&p.target);
                    prop_assert!(prev.zip(all).all(|(a, b)| b >= a), "{ops:?}: decrease at step {k}");
                }
            }
        }
        Ok(())
    });
    Line {
        id: "4 boundedness and monotonicity",
        gated: true,
        passed: result.is_ok(),
        detail: format!(
            "48 random cases x {} operator configs, 4 steps, random inputs and optional Gumbel noise: {}",
            OperatorConfig::ablation_set().len(),
            match result {
                Ok(()) => "no violation".to_string(),
                Err(e) => e.to_string(),
            }
        ),
    }
}

fn run_tasks(tasks: &[TaskName], seeds: u64, edit: impl Fn(&mut ConfigFile)) -> Vec<(TaskName, usize, usize, usize, f64)> {
    let seeds: Vec<u64> = (0..seeds).collect();
    tasks
        .iter()
        .map(|&name| {
            let mut cfg = ConfigFile::for_task(name);
            edit(&mut cfg);
            let start = Instant::now();
            let report = run_experiment(name, &seeds, &cfg, 1).unwrap();
            let both = report.runs.iter().filter(|r| r.soft_success && r.symbolic_success).count();
            let soft = report.runs.iter().filter(|r| r.soft_success).count();
            let train = report.runs.iter().filter(|r| r.train_success).count();
            let per_seed = start.elapsed().as_secs_f64() / seeds.len().max(1) as f64;
            (name, train, soft, both, per_seed)
        })
        .collect()
}

/// End-to-end learning: at least 7 of 10 seeds reach soft and symbolic success.
fn criterion_5() -> Line {
    let tasks = [TaskName::Predecessor, TaskName::UndirectedEdge, TaskName::Grandparent, TaskName::AdjacentToRed];
    let results = run_tasks(&tasks, 10, |_| {});
    let passed = results.iter().all(|r| r.3 >= 7);
    let detail = results
        .iter()
        .map(|(n, t, s, b, secs)| format!("{n}: train {t}/10, soft {s}/10, soft+symbolic {b}/10, {secs:.0} s/seed"))
        .collect::<Vec<_>>()
        .join("; ");
    Line {
        id: "5 end-to-end learning",
        gated: true,
        passed,
        detail: format!("threshold 7/10 at mse < {SUCCESS_MSE:e}; {detail}"),
    }
}

/// Hard tasks are reported only; Length with two auxiliaries per rule builds
/// the wider hypothesis space.
fn criterion_6() -> (Line, Line) {
    let results = run_tasks(&[TaskName::Fizz, TaskName::Length], 3, |_| {});
    let report = results
        .iter()
        .map(|(n, t, s, b, _)| format!("{n}: train {t}/3, soft {s}/3, soft+symbolic {b}/3"))
        .collect::<Vec<_>>()
        .join("; ");
    let task = generate_task(&TaskSpec::new(TaskName::Length, 5, 0)).unwrap();
    let one = build_model::<f64>(&ModelConfig::default(), &task.predicates, &task.target, 0).unwrap();
    let cfg2 = ModelConfig { aux_per_rule: 2, ..ModelConfig::default() };
    let two = build_model::<f64>(&cfg2, &task.predicates, &task.target, 0).unwrap();
    let names: BTreeSet<&str> = two.predicates.iter().map(|p| p.name.as_str()).collect();
    let structural = two.aux.len() == 2 * one.aux.len()
        && two.target_candidates.len() == 2 * one.target_candidates.len()
        && names.contains("l1_b1")
        && names.contains("l4_b1")
        && two.aux.iter().all(|a| a.candidates.len() >= one.aux[0].candidates.len());
    (
        Line { id: "6a hard tasks (report only)", gated: false, passed: true, detail: report },
        Line {
            id: "6b length with two auxiliaries per rule",
            gated: true,
            passed: structural,
            detail: format!(
                "{} auxiliaries ({} with one per rule), {} target candidates",
                two.aux.len(),
                one.aux.len(),
                two.target_candidates.len()
            ),
        },
    )
}

/// Directional sensitivity: both restricted settings reach 0% soft success.
fn criterion_7() -> Line {
    let member = run_tasks(&[TaskName::Member], 10, |c| c.model.recursivity = Recursivity::None);
    let adjacent = run_tasks(&[TaskName::AdjacentToRed], 10, |c| c.model.max_depth = 1);
    let (m, a) = (member[0].2, adjacent[0].2);
    Line {
        id: "7 sensitivity",
        gated: true,
        passed: m == 0 && a == 0,
        detail: format!("member with recursivity none: soft {m}/10 (expected 0); adjacent-to-red with max-depth 1: soft {a}/10 (expected 0)"),
    }
}

/// Permuting constants permutes the soft target exactly.
fn criterion_8() -> Line {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let names = [TaskName::Grandparent, TaskName::AdjacentToRed, TaskName::Member, TaskName::Connectedness];
    let mut mismatches = 0;
    let perms = 24;
    for k in 0..perms {
        let name = names[k % names.len()];
        let task = eval_task(name, k as u64);
        let model = build_model::<f64>(&ModelConfig::default(), &task.predicates, &task.target, k as u64).unwrap();
        let steps = name.profile().eval_steps;
        let base = run_inference(&model, &Instance::new(&task, model.inputs()).unwrap(), steps).unwrap();
        let n = task.constants.len();
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let permuted = task.reorder_constants(&order);
        let out = run_inference(&model, &Instance::new(&permuted, model.inputs()).unwrap(), steps).unwrap();
        for (off, &v) in out.target.iter().enumerate() {
            let orig = match task.target.arity() {
                1 => order[off],
                _ => order[off / n] * n + order[off % n],
            };
            if v != base.target[orig] {
                mismatches += 1;
            }
        }
    }
    Line {
        id: "8 permutation equivariance",
        gated: true,
        passed: mismatches == 0,
        detail: format!("{perms} random permutations over {} tasks, exact comparison; {mismatches} mismatches", names.len()),
    }
}

fn main() -> ExitCode {
    let mut lines = Vec::new();
    let mut report = |l: Line| {
        println!(
            "acceptance {:<40} {}  {}",
            l.id,
            match (l.gated, l.passed) {
                (false, _) => "REPORT",
                (true, true) => "PASS",
                (true, false) => "FAIL",
            },
            l.detail
        );
        lines.push(l);
    };
    // Optional arguments select criteria by number, e.g. `-- 1 2 8`.
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let wanted = |k: &str| only.is_empty() || only.iter().any(|a| a == k);
    if wanted("1") {
        report(criterion_1());
    }
    if wanted("2") {
        report(criterion_2());
    }
    if wanted("3") {
        report(criterion_3());
    }
    if wanted("4") {
        report(criterion_4());
    }
    if wanted("8") {
        report(criterion_8());
    }
    if wanted("5") {
        report(criterion_5());
    }
    if wanted("6") {
        let (a, b) = criterion_6();
        report(a);
        report(b);
    }
    if wanted("7") {
        report(criterion_7());
    }
    if lines.iter().all(|l| !l.gated || l.passed) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
