//! Instance generators for the benchmark tasks.
//!
//! Labels come from direct definitions (arithmetic, graph search), never from
//! a rule program, so the published solutions can be checked against them.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{with_builtins, IlpTask, NegativeSampling, TaskName, TaskSpec};
use crate::logic::{GroundAtom, PredicateSymbol, TRUE};
use crate::{Error, Result};

const MAX_RETRIES: usize = 200;

/// Constant names for non-arithmetic domains: `a`..`z`, then `a1`, `b1`, ...
fn letter(i: usize) -> String {
    let c = (b'a' + (i % 26) as u8) as char;
    if i < 26 {
        c.to_string()
    } else {
        format!("{c}{}", i / 26)
    }
}

fn numbers(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

fn letters(n: usize) -> Vec<String> {
    (0..n).map(letter).collect()
}

struct Draft {
    constants: Vec<String>,
    inputs: Vec<(&'static str, usize)>,
    facts: Vec<(&'static str, Vec<usize>)>,
    target_arity: usize,
    /// Truth value per target grounding, row-major.
    truth: Vec<bool>,
}

impl Draft {
    fn new(constants: Vec<String>, inputs: &[(&'static str, usize)], target_arity: usize) -> Self {
        let cells = constants.len().pow(target_arity as u32);
        Self {
            constants,
            inputs: inputs.to_vec(),
            facts: Vec::new(),
            target_arity,
            truth: vec![false; cells],
        }
    }

    fn fact(&mut self, pred: &'static str, args: &[usize]) {
        self.facts.push((pred, args.to_vec()));
    }

    fn set1(&mut self, x: usize) {
        self.truth[x] = true;
    }

    fn set2(&mut self, x: usize, y: usize) {
        let n = self.constants.len();
        self.truth[x * n + y] = true;
    }

    fn has_both_labels(&self) -> bool {
        self.truth.iter().any(|&t| t) && self.truth.iter().any(|&t| !t)
    }

    fn finish(self, name: TaskName, sampling: NegativeSampling, rng: &mut ChaCha8Rng) -> IlpTask {
        let n = self.constants.len();
        let atom = |pred: &str, args: &[usize], constants: &[String]| {
            GroundAtom::new(pred, &args.iter().map(|&a| constants[a].as_str()).collect::<Vec<_>>())
        };
        let mut background: BTreeSet<GroundAtom> = self
            .facts
            .iter()
            .map(|(p, args)| atom(p, args, &self.constants))
            .collect();
        background.insert(GroundAtom::new::<&str>(TRUE, &[]));
        let mut positives = BTreeSet::new();
        let mut negatives = BTreeSet::new();
        for (cell, &t) in self.truth.iter().enumerate() {
            let args: Vec<usize> = match self.target_arity {
                1 => vec![cell],
                _ => vec![cell / n, cell % n],
            };
            let a = atom("target", &args, &self.constants);
            if t {
                positives.insert(a);
            } else {
                let keep = match sampling {
                    NegativeSampling::Complement => true,
                    NegativeSampling::Fraction(p) => rng.gen_bool(p.clamp(0.0, 1.0)),
                };
                if keep {
                    negatives.insert(a);
                }
            }
        }
        IlpTask {
            name: name.as_str().to_string(),
            constants: self.constants,
            predicates: with_builtins(&self.inputs),
            background,
            positives,
            negatives,
            target: PredicateSymbol::target("target", self.target_arity),
        }
    }
}

/// Builds a task instance. Deterministic in `(name, num_constants, seed)`;
/// arithmetic tasks ignore the seed.
pub fn generate_task(spec: &TaskSpec) -> Result<IlpTask> {
    let name = spec.name;
    let n = spec.num_constants;
    if n < name.min_constants() {
        return Err(Error::TooFewConstants {
            task: name.as_str().to_string(),
            min: name.min_constants(),
            got: n,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let draft = if name.is_deterministic() {
        arithmetic(name, n)
    } else {
        let mut attempt = 0;
        loop {
            let d = random_draft(name, n, &mut rng);
            attempt += 1;
            if d.has_both_labels() || attempt >= MAX_RETRIES {
                break d;
            }
        }
    };
    let task = draft.finish(name, spec.negatives, &mut rng);
    debug_assert!(task.validate().is_ok());
    Ok(task)
}

fn arithmetic(name: TaskName, n: usize) -> Draft {
    let mut inputs = vec![("zero", 1), ("succ", 2)];
    if name == TaskName::Buzz {
        inputs.extend([("pred1", 2), ("pred2", 2)]);
    }
    let mut d = Draft::new(numbers(n), &inputs, name.target_arity());
    d.fact("zero", &[0]);
    for i in 0..n - 1 {
        d.fact("succ", &[i, i + 1]);
    }
    if name == TaskName::Buzz {
        for i in 0..n {
            if i + 3 < n {
                d.fact("pred1", &[i, i + 3]);
            }
            if i + 2 < n {
                d.fact("pred2", &[i, i + 2]);
            }
        }
    }
    match name {
        TaskName::Predecessor => (1..n).for_each(|i| d.set2(i, i - 1)),
        TaskName::LessThan => {
            for x in 0..n {
                for y in x + 1..n {
                    d.set2(x, y);
                }
            }
        }
        TaskName::EvenOdd | TaskName::EvenSucc2 => (0..n).step_by(2).for_each(|i| d.set1(i)),
        TaskName::Buzz => (0..n).step_by(5).for_each(|i| d.set1(i)),
        TaskName::Fizz => (0..n).step_by(3).for_each(|i| d.set1(i)),
        _ => unreachable!("{name} is not arithmetic"),
    }
    d
}

fn random_edges(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && rng.gen_bool(p) {
                out.push((a, b));
            }
        }
    }
    out
}

/// `reach[a][b]`: a path of length at least one leads from `a` to `b`.
fn reachability(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut reach = vec![vec![false; n]; n];
    for &(a, b) in edges {
        reach[a][b] = true;
    }
    for k in 0..n {
        for i in 0..n {
            if reach[i][k] {
                for j in 0..n {
                    if reach[k][j] {
                        reach[i][j] = true;
                    }
                }
            }
        }
    }
    reach
}

fn random_draft(name: TaskName, n: usize, rng: &mut ChaCha8Rng) -> Draft {
    match name {
        TaskName::UndirectedEdge => {
            let mut d = Draft::new(letters(n), &[("edge", 2)], 2);
            for (a, b) in random_edges(n, 0.3, rng) {
                d.fact("edge", &[a, b]);
                d.set2(a, b);
                d.set2(b, a);
            }
            d
        }
        TaskName::Connectedness => {
            let mut d = Draft::new(letters(n), &[("edge", 2)], 2);
            let edges = random_edges(n, 0.25, rng);
            let reach = reachability(n, &edges);
            for &(a, b) in &edges {
                d.fact("edge", &[a, b]);
            }
            for (a, row) in reach.iter().enumerate() {
                for (b, &r) in row.iter().enumerate() {
                    if r {
                        d.set2(a, b);
                    }
                }
            }
            d
        }
        TaskName::Cyclic => {
            let mut d = Draft::new(letters(n), &[("edge", 2)], 1);
            let edges = random_edges(n, 0.2, rng);
            let reach = reachability(n, &edges);
            for &(a, b) in &edges {
                d.fact("edge", &[a, b]);
            }
            (0..n).filter(|&a| reach[a][a]).for_each(|a| d.set1(a));
            d
        }
        TaskName::TwoChildren => {
            let mut d = Draft::new(letters(n), &[("edge", 2), ("neq", 2)], 1);
            let edges = random_edges(n, 0.3, rng);
            for &(a, b) in &edges {
                d.fact("edge", &[a, b]);
            }
            for a in 0..n {
                for b in 0..n {
                    if a != b {
                        d.fact("neq", &[a, b]);
                    }
                }
                if edges.iter().filter(|e| e.0 == a).count() >= 2 {
                    d.set1(a);
                }
            }
            d
        }
        TaskName::AdjacentToRed | TaskName::GraphColoring => coloured_graph(name, n, rng),
        TaskName::Son => son(n, rng),
        TaskName::Grandparent => grandparent(n, rng),
        TaskName::Relatedness => relatedness(n, rng),
        TaskName::Member => member(n, rng),
        TaskName::Length => length(n, rng),
        _ => unreachable!("{name} is deterministic"),
    }
}

/// Nodes `0..n-2`; the last two constants are the colours, the first of
/// which is red.
fn coloured_graph(name: TaskName, n: usize, rng: &mut ChaCha8Rng) -> Draft {
    let nodes = n - 2;
    let (red, green) = (n - 2, n - 1);
    let inputs: &[(&'static str, usize)] = if name == TaskName::AdjacentToRed {
        &[("edge", 2), ("colour", 2), ("red", 1)]
    } else {
        &[("edge", 2), ("colour", 2)]
    };
    let mut d = Draft::new(letters(n), inputs, name.target_arity());
    let colour: Vec<usize> = (0..nodes)
        .map(|_| if rng.gen_bool(0.4) { red } else { green })
        .collect();
    let edges = random_edges(nodes, 0.25, rng);
    for (v, &c) in colour.iter().enumerate() {
        d.fact("colour", &[v, c]);
    }
    for &(a, b) in &edges {
        d.fact("edge", &[a, b]);
    }
    if name == TaskName::AdjacentToRed {
        d.fact("red", &[red]);
        for &(a, b) in &edges {
            if colour[b] == red {
                d.set1(a);
            }
        }
    } else {
        for &(a, b) in &edges {
            if colour[a] == colour[b] {
                d.set2(a, b);
            }
        }
    }
    d
}

/// Random forest: each person after the first may get a parent among the
/// earlier ones.
fn forest(n: usize, p: f64, rng: &mut ChaCha8Rng) -> Vec<Option<usize>> {
    (0..n)
        .map(|i| (i > 0 && rng.gen_bool(p)).then(|| rng.gen_range(0..i)))
        .collect()
}

fn son(n: usize, rng: &mut ChaCha8Rng) -> Draft {
    let mut d = Draft::new(letters(n), &[("father", 2), ("brother", 2), ("sister", 2)], 2);
    let mut male: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    let mut father: Vec<Option<usize>> = vec![None; n];
    for i in 1..n {
        let candidates: Vec<usize> = (0..i).filter(|&j| male[j]).collect();
        if !candidates.is_empty() && rng.gen_bool(0.8) {
            father[i] = candidates.choose(rng).copied();
        }
    }
    let siblings = |i: usize, father: &[Option<usize>]| -> Vec<usize> {
        match father[i] {
            None => Vec::new(),
            Some(f) => (0..n).filter(|&j| j != i && father[j] == Some(f)).collect(),
        }
    };
    // A son is only recognisable as male through a brother or father fact.
    for i in 0..n {
        let is_father = father.iter().any(|f| *f == Some(i));
        if male[i] && father[i].is_some() && !is_father && siblings(i, &father).is_empty() {
            male[i] = false;
        }
    }
    for i in 0..n {
        if let Some(f) = father[i] {
            d.fact("father", &[f, i]);
            if male[i] {
                d.set2(i, f);
            }
        }
        for s in siblings(i, &father) {
            d.fact(if male[i] { "brother" } else { "sister" }, &[i, s]);
        }
    }
    d
}

fn grandparent(n: usize, rng: &mut ChaCha8Rng) -> Draft {
    let mut d = Draft::new(letters(n), &[("father", 2), ("mother", 2)], 2);
    let male: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    let mut parents: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 1..n {
        for want_male in [true, false] {
            let pool: Vec<usize> = (0..i).filter(|&j| male[j] == want_male).collect();
            if !pool.is_empty() && rng.gen_bool(0.7) {
                let p = *pool.choose(rng).unwrap();
                d.fact(if want_male { "father" } else { "mother" }, &[p, i]);
                parents[i].push(p);
            }
        }
    }
    for c in 0..n {
        for &p in &parents[c] {
            for &g in &parents[p] {
                d.set2(g, c);
            }
        }
    }
    d
}

/// Related means linked through any chain of parent links in either
/// direction; a person with at least one relative is related to itself.
fn relatedness(n: usize, rng: &mut ChaCha8Rng) -> Draft {
    let mut d = Draft::new(letters(n), &[("parent", 2)], 2);
    let parent = forest(n, 0.6, rng);
    let mut edges = Vec::new();
    for (c, p) in parent.iter().enumerate() {
        if let Some(p) = *p {
            d.fact("parent", &[p, c]);
            edges.push((p, c));
            edges.push((c, p));
        }
    }
    let reach = reachability(n, &edges);
    for (a, row) in reach.iter().enumerate() {
        for (b, &r) in row.iter().enumerate() {
            if r {
                d.set2(a, b);
            }
        }
    }
    d
}

/// One list threaded through every non-null node. `value(v, node)` stores
/// `v` at `node` and `cons(next, node)` links a node to its successor; `0` is
/// the null node.
fn member(n: usize, rng: &mut ChaCha8Rng) -> Draft {
    let mut d = Draft::new(numbers(n), &[("cons", 2), ("value", 2)], 2);
    let mut nodes: Vec<usize> = (1..n).collect();
    nodes.shuffle(rng);
    let values: Vec<usize> = nodes.iter().map(|_| rng.gen_range(1..n)).collect();
    for (k, &node) in nodes.iter().enumerate() {
        let next = nodes.get(k + 1).copied().unwrap_or(0);
        d.fact("cons", &[next, node]);
        d.fact("value", &[values[k], node]);
        for &v in &values[k..] {
            d.set2(v, node);
        }
    }
    d
}

/// A list over a random subset of nodes; `cons(node, next)` with `0` as the
/// terminator. Integers share the constant domain with nodes.
fn length(n: usize, rng: &mut ChaCha8Rng) -> Draft {
    let mut d = Draft::new(numbers(n), &[("cons", 2), ("succ", 2), ("zero", 1)], 2);
    d.fact("zero", &[0]);
    for i in 0..n - 1 {
        d.fact("succ", &[i, i + 1]);
    }
    let len = rng.gen_range(1..n);
    let mut nodes: Vec<usize> = (1..n).collect();
    nodes.shuffle(rng);
    nodes.truncate(len);
    for (k, &node) in nodes.iter().enumerate() {
        let next = nodes.get(k + 1).copied().unwrap_or(0);
        d.fact("cons", &[node, next]);
        d.set2(node, len - k);
    }
    d
}
