//! Reading a symbolic program off a trained model.
//!
//! Each slot is replaced by its highest-scoring candidate. Starting from the
//! target, the chosen rules are turned into definite clauses, simple
//! single-literal auxiliaries are inlined, unreachable ones dropped and the
//! survivors renamed `aux1`, `aux2`, ... in breadth-first order.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use serde::Serialize;

use crate::inference::{compute_scores, SlotScores};
use crate::logic::{
    forward_chain_with, mse, normalize_aux_clause, ChainOptions, DefiniteClause, GroundAtom, Literal,
    SymbolicProgram, Var,
};
use crate::model::{Model, RuleShape};
use crate::tasks::IlpTask;
use crate::{Result, Scalar};

/// Tie-breaking rule applied when several candidates share the top score.
pub const TIE_BREAK: &str = "lowest layer, then lexicographic name";

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlotAssignment {
    /// Auxiliary predicate (model name) or the target.
    pub owner: String,
    /// Slot position inside its rule (0-based; the target slot is 0).
    pub position: usize,
    pub chosen: String,
    pub alpha: f64,
    /// The top score was shared and the tie-breaking rule decided.
    pub tied: bool,
    /// Every candidate's score, in candidate order.
    pub scores: Vec<(String, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtractionResult {
    pub program: SymbolicProgram,
    pub slot_assignments: Vec<SlotAssignment>,
    /// Auxiliary predicates (model names) not reachable from the target.
    pub pruned: Vec<String>,
    /// Surviving auxiliaries: model name to printed name.
    pub renamed: Vec<(String, String)>,
    /// Clauses whose body is just `true`.
    pub degenerate: Vec<String>,
    pub tie_break: &'static str,
}

#[derive(Clone, Copy, Debug)]
pub struct ExtractOptions {
    /// Inline auxiliaries defined by a single one-literal clause.
    pub unfold: bool,
}

impl Default for ExtractOptions {
    fn default() -> Self {
        Self { unfold: true }
    }
}

pub fn extract_program<S: Scalar>(model: &Model<S>) -> Result<ExtractionResult> {
    let scores = compute_scores(model, None)?;
    Ok(extract_from_scores(model, &scores, ExtractOptions::default()))
}

fn literal_for(name: &str, arity: usize, pattern: [Var; 2]) -> Literal {
    Literal::new(name, &pattern[..arity])
}

/// Renames variables: head variables become `X`, `Y`, the rest `Z`, `T`,
/// then `Y` when a unary head leaves it free.
fn canonicalize(clause: &DefiniteClause) -> DefiniteClause {
    let mut map: HashMap<Var, Var> = HashMap::new();
    let mut head_next = [Var::X, Var::Y].into_iter();
    for v in &clause.head.args {
        if !map.contains_key(v) {
            map.insert(*v, head_next.next().expect("head arity at most 2"));
        }
    }
    let head_vars: Vec<Var> = map.values().copied().collect();
    let mut ex_next = [Var::Z, Var::T, Var::Y].into_iter().filter(|v| !head_vars.contains(v));
    for v in clause.body.iter().flat_map(|l| l.args.iter()) {
        if !map.contains_key(v) {
            map.insert(*v, ex_next.next().expect("at most four variables"));
        }
    }
    let rename = |l: &Literal| Literal {
        predicate: l.predicate.clone(),
        args: l.args.iter().map(|v| map[v]).collect(),
    };
    DefiniteClause {
        head: rename(&clause.head),
        body: clause.body.iter().map(rename).collect(),
        stratum: clause.stratum,
    }
}

fn argmax<S: Scalar>(model: &Model<S>, alpha: &[S], cands: &[usize]) -> (usize, bool) {
    let top = alpha.iter().fold(S::neg_infinity(), |m, &a| m.max(a));
    let tied: Vec<usize> = (0..cands.len()).filter(|&i| alpha[i] == top).collect();
    let best = *tied
        .iter()
        .min_by(|&&a, &&b| {
            let (pa, pb) = (cands[a], cands[b]);
            (model.layer_of(pa), &model.predicates[pa].name).cmp(&(model.layer_of(pb), &model.predicates[pb].name))
        })
        .expect("non-empty candidate set");
    (best, tied.len() > 1)
}

/// Extraction from explicit scores (normally the noise-free ones).
pub fn extract_from_scores<S: Scalar>(model: &Model<S>, scores: &SlotScores<S>, options: ExtractOptions) -> ExtractionResult {
    let names = |p: usize| model.predicates[p].name.clone();
    let mut assignments = Vec::new();
    let mut chosen: Vec<usize> = Vec::with_capacity(model.num_slots());
    for s in 0..model.num_slots() {
        let cands = model.slot_candidates(s);
        let (i, tied) = argmax(model, &scores[s], cands);
        chosen.push(cands[i]);
        let (owner, position) = model.slot_owner(s);
        assignments.push(SlotAssignment {
            owner: owner.to_string(),
            position,
            chosen: names(cands[i]),
            alpha: scores[s][i].as_f64(),
            tied,
            scores: cands.iter().zip(&scores[s]).map(|(&c, a)| (names(c), a.as_f64())).collect(),
        });
    }

    let q = chosen[model.target_slot()];
    let aux_of = |p: usize| &model.aux[p - model.num_inputs];
    let mut clauses: Vec<DefiniteClause> = Vec::new();
    let mut seen = BTreeSet::from([q]);
    let mut queue = VecDeque::from([q]);
    use Var::*;
    while let Some(p) = queue.pop_front() {
        let aux = aux_of(p);
        let rule = aux.rule;
        let lit = |slot: usize, pattern: [Var; 2]| {
            let c = chosen[aux.first_slot + slot];
            literal_for(&names(c), model.predicates[c].arity(), pattern)
        };
        let head = if rule.head_arity() == 1 {
            Literal::new(names(p), &[X])
        } else {
            Literal::new(names(p), &[X, Y])
        };
        let produced = match rule.shape {
            RuleShape::I => normalize_aux_clause(head, (lit(0, [Y, X]), Literal::new(crate::logic::TRUE, &[])), None),
            shape => {
                let (p1, p2, p3) = match shape {
                    RuleShape::A => ([X, Y], [Y, X], [X, T]),
                    RuleShape::B => ([X, Z], [Z, Y], [X, Y]),
                    _ => ([X, Y], [Y, X], [X, Y]),
                };
                normalize_aux_clause(head, (lit(0, p1), lit(1, p2)), rule.disjunct.then(|| lit(2, p3)))
            }
        };
        for c in produced {
            for l in &c.body {
                if let Some(b) = model.predicate_index(&l.predicate) {
                    if b >= model.num_inputs && seen.insert(b) {
                        queue.push_back(b);
                    }
                }
            }
            clauses.push(c.with_stratum(aux.layer));
        }
    }

    let target_name = model.target.name.clone();
    let qname = names(q);
    for c in clauses.iter_mut() {
        for l in std::iter::once(&mut c.head).chain(c.body.iter_mut()) {
            if l.predicate == qname {
                l.predicate = target_name.clone();
            }
        }
    }
    // An auxiliary left without clauses is empty; clauses calling it never fire.
    loop {
        let defined: BTreeSet<&str> = clauses.iter().map(|c| c.head.predicate.as_str()).collect();
        let dead = |c: &DefiniteClause| {
            c.body.iter().any(|l| {
                l.predicate != target_name
                    && !defined.contains(l.predicate.as_str())
                    && model.predicate_index(&l.predicate).is_some_and(|p| p >= model.num_inputs)
            })
        };
        let before = clauses.len();
        let kept: Vec<DefiniteClause> = clauses.iter().filter(|c| !dead(c)).cloned().collect();
        clauses = kept;
        if clauses.len() == before {
            break;
        }
    }
    let layer_by_name = |n: &str| -> usize {
        if n == target_name {
            model.layer_of(q)
        } else {
            model.predicate_index(n).map(|p| model.layer_of(p)).unwrap_or(0)
        }
    };
    if options.unfold {
        unfold(&mut clauses, &target_name, &layer_by_name);
    }

    // Reachability and renaming in breadth-first order from the target.
    let mut order: Vec<String> = vec![target_name.clone()];
    let mut i = 0;
    while i < order.len() {
        let head = order[i].clone();
        for c in clauses.iter().filter(|c| c.head.predicate == head) {
            for l in &c.body {
                let is_aux = model
                    .predicate_index(&l.predicate)
                    .is_some_and(|p| p >= model.num_inputs);
                if is_aux && !order.contains(&l.predicate) {
                    order.push(l.predicate.clone());
                }
            }
        }
        i += 1;
    }
    let renamed: Vec<(String, String)> = order[1..]
        .iter()
        .enumerate()
        .map(|(k, n)| (n.clone(), format!("aux{}", k + 1)))
        .collect();
    let rename_map: HashMap<&str, &str> = renamed.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    let mut program_clauses = Vec::new();
    for head in &order {
        for c in clauses.iter().filter(|c| &c.head.predicate == head) {
            let mut c = canonicalize(c);
            for l in std::iter::once(&mut c.head).chain(c.body.iter_mut()) {
                if let Some(r) = rename_map.get(l.predicate.as_str()) {
                    l.predicate = r.to_string();
                }
            }
            program_clauses.push(c);
        }
    }
    let kept: BTreeSet<&str> = order.iter().map(String::as_str).collect();
    let pruned = model
        .aux
        .iter()
        .map(|a| names(a.predicate))
        .filter(|n| !kept.contains(n.as_str()) && *n != qname)
        .collect();
    let degenerate = program_clauses
        .iter()
        .filter(|c| c.body.len() == 1 && c.body[0].is_true())
        .map(|c| c.to_string())
        .collect();
    ExtractionResult {
        program: SymbolicProgram::new(model.target.clone(), program_clauses),
        slot_assignments: assignments,
        pruned,
        renamed,
        degenerate,
        tie_break: TIE_BREAK,
    }
}

/// Inlines auxiliaries defined by exactly one clause with one body literal.
/// Only callees whose body reads a strictly lower layer and whose callers sit
/// on strictly higher layers are inlined, so truncated chaining still sees
/// every atom in the same pass.
fn unfold(clauses: &mut Vec<DefiniteClause>, target: &str, layer: &dyn Fn(&str) -> usize) {
    loop {
        let mut done = true;
        let heads: BTreeSet<String> = clauses.iter().map(|c| c.head.predicate.clone()).collect();
        for name in heads {
            if name == target {
                continue;
            }
            let defs: Vec<&DefiniteClause> = clauses.iter().filter(|c| c.head.predicate == name).collect();
            if defs.len() != 1 || defs[0].body.len() != 1 {
                continue;
            }
            let def = defs[0].clone();
            let callee = &def.body[0];
            if callee.arity() == 0 || callee.predicate == name || layer(&callee.predicate) >= layer(&name) {
                continue;
            }
            let callers_ok = clauses
                .iter()
                .filter(|c| c.head.predicate != name)
                .all(|c| c.body.iter().all(|l| l.predicate != name) || c.stratum > def.stratum);
            if !callers_ok {
                continue;
            }
            let mut rewritten = Vec::with_capacity(clauses.len());
            let mut ok = true;
            for c in clauses.iter() {
                if c.head.predicate == name {
                    continue;
                }
                match substitute(c, &def) {
                    Some(n) => rewritten.push(n),
                    None => {
                        ok = false;
                        break;
                    }
                }
            }
            if ok {
                *clauses = rewritten;
                done = false;
                break;
            }
        }
        if done {
            return;
        }
    }
}

/// Replaces calls to `def`'s head in `clause` by `def`'s body literal.
/// Returns `None` when the result would need more than four variables.
fn substitute(clause: &DefiniteClause, def: &DefiniteClause) -> Option<DefiniteClause> {
    let name = &def.head.predicate;
    if clause.body.iter().all(|l| &l.predicate != name) {
        return Some(clause.clone());
    }
    let mut used: BTreeSet<Var> = clause.variables().into_iter().collect();
    let mut body = Vec::with_capacity(clause.body.len());
    for l in &clause.body {
        if &l.predicate != name {
            body.push(l.clone());
            continue;
        }
        let mut map: HashMap<Var, Var> = def.head.args.iter().copied().zip(l.args.iter().copied()).collect();
        let src = &def.body[0];
        let mut args = Vec::with_capacity(src.arity());
        for v in &src.args {
            let w = match map.get(v) {
                Some(w) => *w,
                None => {
                    let fresh = Var::ALL.into_iter().find(|f| !used.contains(f))?;
                    used.insert(fresh);
                    map.insert(*v, fresh);
                    fresh
                }
            };
            args.push(w);
        }
        body.push(Literal {
            predicate: src.predicate.clone(),
            args,
        });
    }
    Some(DefiniteClause {
        head: clause.head.clone(),
        body,
        stratum: clause.stratum,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymbolicEvaluation {
    pub mse: f64,
    pub success: bool,
    /// Labelled atoms predicted wrongly.
    pub errors: usize,
    /// Whether chaining reached a fixpoint within the step budget.
    pub fixpoint: bool,
}

/// Success threshold on the mean squared error.
pub const SUCCESS_MSE: f64 = 1e-4;

/// Forward-chains the extracted program on the task's facts and scores the
/// target against the labelled examples.
pub fn symbolic_evaluate(result: &ExtractionResult, task: &IlpTask, max_steps: usize) -> Result<SymbolicEvaluation> {
    evaluate_program(&result.program, task, max_steps)
}

pub fn evaluate_program(program: &SymbolicProgram, task: &IlpTask, max_steps: usize) -> Result<SymbolicEvaluation> {
    let options = ChainOptions {
        declared: task.predicates.clone(),
        equal: false,
    };
    let outcome = forward_chain_with(program, &task.background, &task.constants, max_steps, &options)?;
    let truth: BTreeMap<GroundAtom, bool> = task.labels();
    let predicted: BTreeMap<GroundAtom, f64> = truth
        .keys()
        .map(|a| (a.clone(), if outcome.atoms.contains(a) { 1.0 } else { 0.0 }))
        .collect();
    let errors = truth
        .iter()
        .filter(|(a, &l)| outcome.atoms.contains(*a) != l)
        .count();
    let m = mse(&predicted, &truth)?;
    Ok(SymbolicEvaluation {
        mse: m,
        success: m < SUCCESS_MSE,
        errors,
        fixpoint: outcome.fixpoint,
    })
}

/// Structured dump of an extraction with every slot's scores.
pub fn audit_json(result: &ExtractionResult) -> Result<String> {
    #[derive(Serialize)]
    struct Audit<'a> {
        program: Vec<String>,
        #[serde(flatten)]
        result: &'a ExtractionResult,
    }
    let audit = Audit {
        program: result.program.clauses.iter().map(|c| c.to_string()).collect(),
        result,
    };
    Ok(serde_json::to_string_pretty(&audit)?)
}
