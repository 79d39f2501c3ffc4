//! Naive bottom-up forward chaining over dense boolean relations.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{DefiniteClause, GroundAtom, PredicateSymbol, SymbolicProgram, EQUAL, FALSE, TRUE};
use crate::{Error, Result};

/// Extra knobs for [`forward_chain_with`].
#[derive(Clone, Debug, Default)]
pub struct ChainOptions {
    /// Predicates that are known even when no fact mentions them.
    pub declared: Vec<PredicateSymbol>,
    /// Enables the `equal/2` builtin.
    pub equal: bool,
}

#[derive(Clone, Debug)]
pub struct ChainOutcome {
    pub atoms: BTreeSet<GroundAtom>,
    /// Passes that derived at least one new atom.
    pub productive_passes: usize,
    /// True when a pass derived nothing new before `max_steps` ran out.
    pub fixpoint: bool,
}

struct Relation {
    arity: usize,
    bits: Vec<bool>,
    builtin: bool,
}

struct CompiledLiteral {
    rel: usize,
    vars: Vec<usize>,
}

struct CompiledClause {
    head: CompiledLiteral,
    body: Vec<CompiledLiteral>,
    /// Variable binding order.
    order: Vec<usize>,
    /// Body literals to test once `order[depth]` is bound.
    checks: Vec<Vec<usize>>,
    /// Zero-ary body literals, tested before enumeration.
    ground: Vec<usize>,
}

struct Db {
    n: usize,
    names: Vec<String>,
    rels: Vec<Relation>,
    index: HashMap<String, usize>,
}

impl Db {
    fn declare(&mut self, name: &str, arity: usize) -> Result<usize> {
        if let Some(&id) = self.index.get(name) {
            let rel = &self.rels[id];
            if rel.arity != arity {
                return Err(Error::ArityMismatch {
                    predicate: name.to_string(),
                    expected: rel.arity,
                    found: arity,
                });
            }
            return Ok(id);
        }
        let id = self.rels.len();
        self.rels.push(Relation {
            arity,
            bits: vec![false; self.n.pow(arity as u32)],
            builtin: false,
        });
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), id);
        Ok(id)
    }

    fn offset(&self, args: impl Iterator<Item = usize>) -> usize {
        args.fold(0, |acc, a| acc * self.n + a)
    }

    fn holds(&self, lit: &CompiledLiteral, binding: &[usize; 4]) -> bool {
        let off = self.offset(lit.vars.iter().map(|&v| binding[v]));
        self.rels[lit.rel].bits[off]
    }
}

/// Least fixpoint of the immediate-consequence operator, truncated after
/// `max_steps` passes. The output always contains `facts`.
pub fn forward_chain(
    program: &SymbolicProgram,
    facts: &BTreeSet<GroundAtom>,
    constants: &[String],
    max_steps: usize,
) -> Result<BTreeSet<GroundAtom>> {
    forward_chain_with(program, facts, constants, max_steps, &ChainOptions::default())
        .map(|o| o.atoms)
}

pub fn forward_chain_with(
    program: &SymbolicProgram,
    facts: &BTreeSet<GroundAtom>,
    constants: &[String],
    max_steps: usize,
    options: &ChainOptions,
) -> Result<ChainOutcome> {
    let n = constants.len();
    let cindex: HashMap<&str, usize> = constants
        .iter()
        .enumerate()
        .map(|(i, c)| (c.as_str(), i))
        .collect();
    let mut db = Db {
        n,
        names: Vec::new(),
        rels: Vec::new(),
        index: HashMap::new(),
    };
    for (name, arity, value) in [(TRUE, 0, true), (FALSE, 0, false)] {
        let id = db.declare(name, arity)?;
        db.rels[id].bits[0] = value;
        db.rels[id].builtin = true;
    }
    if options.equal {
        let id = db.declare(EQUAL, 2)?;
        for i in 0..n {
            db.rels[id].bits[i * n + i] = true;
        }
        db.rels[id].builtin = true;
    }
    for p in &options.declared {
        db.declare(&p.name, p.arity())?;
    }
    for atom in facts {
        let id = db.declare(&atom.predicate, atom.arity())?;
        if db.rels[id].builtin {
            continue;
        }
        let mut off = 0;
        for a in &atom.args {
            let c = *cindex
                .get(a.as_str())
                .ok_or_else(|| Error::UnknownConstant(a.clone()))?;
            off = off * n + c;
        }
        db.rels[id].bits[off] = true;
    }
    for c in &program.clauses {
        let id = db.declare(&c.head.predicate, c.head.arity())?;
        if db.rels[id].builtin {
            return Err(Error::InvalidConfig(format!(
                "clause head redefines builtin `{}`",
                c.head.predicate
            )));
        }
    }
    let compiled = program
        .clauses
        .iter()
        .map(|c| compile(c, &db))
        .collect::<Result<Vec<_>>>()?;

    let mut strata: Vec<usize> = program.clauses.iter().map(|c| c.stratum).collect();
    strata.sort_unstable();
    strata.dedup();

    let mut productive = 0;
    let mut fixpoint = false;
    for _ in 0..max_steps {
        let mut changed = false;
        for &s in &strata {
            let mut derived: Vec<(usize, usize)> = Vec::new();
            for (clause, src) in compiled.iter().zip(&program.clauses) {
                if src.stratum == s {
                    fire(clause, &db, &mut derived);
                }
            }
            for (rel, off) in derived {
                let bit = &mut db.rels[rel].bits[off];
                if !*bit {
                    *bit = true;
                    changed = true;
                }
            }
        }
        if !changed {
            fixpoint = true;
            break;
        }
        productive += 1;
    }

    let mut atoms = facts.clone();
    for (id, rel) in db.rels.iter().enumerate() {
        if rel.builtin {
            continue;
        }
        for (off, &b) in rel.bits.iter().enumerate() {
            if b {
                let args: Vec<&str> = match rel.arity {
                    0 => vec![],
                    1 => vec![&constants[off]],
                    _ => vec![&constants[off / n], &constants[off % n]],
                };
                atoms.insert(GroundAtom::new(db.names[id].clone(), &args));
            }
        }
    }
    Ok(ChainOutcome {
        atoms,
        productive_passes: productive,
        fixpoint,
    })
}

fn compile(clause: &DefiniteClause, db: &Db) -> Result<CompiledClause> {
    let lit = |l: &super::Literal| -> Result<CompiledLiteral> {
        let rel = *db
            .index
            .get(&l.predicate)
            .ok_or_else(|| Error::UnknownPredicate(l.predicate.clone()))?;
        if db.rels[rel].arity != l.arity() {
            return Err(Error::ArityMismatch {
                predicate: l.predicate.clone(),
                expected: db.rels[rel].arity,
                found: l.arity(),
            });
        }
        Ok(CompiledLiteral {
            rel,
            vars: l.args.iter().map(|v| v.index()).collect(),
        })
    };
    let head = lit(&clause.head)?;
    let body = clause.body.iter().map(lit).collect::<Result<Vec<_>>>()?;

    let mut order: Vec<usize> = Vec::new();
    for v in body.iter().flat_map(|l| l.vars.iter()).chain(head.vars.iter()) {
        if !order.contains(v) {
            order.push(*v);
        }
    }
    let mut checks = vec![Vec::new(); order.len()];
    let mut ground = Vec::new();
    for (i, l) in body.iter().enumerate() {
        match l.vars.iter().map(|v| order.iter().position(|o| o == v).unwrap()).max() {
            Some(depth) => checks[depth].push(i),
            None => ground.push(i),
        }
    }
    Ok(CompiledClause {
        head,
        body,
        order,
        checks,
        ground,
    })
}

fn fire(clause: &CompiledClause, db: &Db, out: &mut Vec<(usize, usize)>) {
    let mut binding = [0usize; 4];
    if clause
        .ground
        .iter()
        .any(|&i| !db.holds(&clause.body[i], &binding))
    {
        return;
    }
    enumerate(clause, db, 0, &mut binding, out);
}

fn enumerate(
    clause: &CompiledClause,
    db: &Db,
    depth: usize,
    binding: &mut [usize; 4],
    out: &mut Vec<(usize, usize)>,
) {
    if depth == clause.order.len() {
        let off = db.offset(clause.head.vars.iter().map(|&v| binding[v]));
        if !db.rels[clause.head.rel].bits[off] {
            out.push((clause.head.rel, off));
        }
        return;
    }
    let var = clause.order[depth];
    for c in 0..db.n {
        binding[var] = c;
        if clause.checks[depth]
            .iter()
            .all(|&i| db.holds(&clause.body[i], binding))
        {
            enumerate(clause, db, depth + 1, binding, out);
        }
    }
}

/// Mean squared error between predicted degrees and crisp labels over the
/// same atom set.
pub fn mse(
    predicted: &BTreeMap<GroundAtom, f64>,
    truth: &BTreeMap<GroundAtom, bool>,
) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::MismatchedAtoms(format!(
            "{} predicted vs {} labelled atoms",
            predicted.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    for (atom, &label) in truth {
        let p = predicted
            .get(atom)
            .ok_or_else(|| Error::MismatchedAtoms(format!("no prediction for `{atom}`")))?;
        let d = p - if label { 1.0 } else { 0.0 };
        sum += d * d;
    }
    Ok(sum / truth.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::logic::{parse_program, parse_rules};

    fn consts(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    fn facts(text: &str) -> BTreeSet<GroundAtom> {
        parse_rules(text).unwrap().1.into_iter().collect()
    }

    #[test]
    fn even_succ_chain() {
        let program = parse_program(
            "even(X) :- zero(X).\neven(X) :- even(Y), aux(Y,X).\naux(X,Y) :- succ(X,Z), succ(Z,Y).\n",
            PredicateSymbol::target("even", 1),
        )
        .unwrap();
        let f = facts("zero(0).\nsucc(0,1).\nsucc(1,2).\n");
        let out = forward_chain(&program, &f, &consts(3), 10).unwrap();
        let derived: BTreeSet<String> = out.difference(&f).map(|a| a.to_string()).collect();
        let expected: BTreeSet<String> = ["aux(0,2)", "even(0)", "even(2)"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        assert_eq!(derived, expected);
    }

    #[test]
    fn empty_program_returns_facts() {
        let f = facts("edge(0,1).\nedge(1,2).\n");
        let p = SymbolicProgram::empty(PredicateSymbol::target("t", 2));
        assert_eq!(forward_chain(&p, &f, &consts(3), 5).unwrap(), f);
    }

    #[test]
    fn less_than_matches_enumeration() {
        let program = parse_program(
            "target(X,Y) :- target(X,Z), target(Z,Y).\ntarget(X,Y) :- succ(X,Y).\n",
            PredicateSymbol::target("target", 2),
        )
        .unwrap();
        let n = 5;
        let f: BTreeSet<GroundAtom> = (0..n - 1)
            .map(|i| GroundAtom::new("succ", &[i.to_string(), (i + 1).to_string()]))
            .chain([GroundAtom::new::<&str>("zero", &["0"])])
            .collect();
        let out = forward_chain(&program, &f, &consts(n), 100).unwrap();
        for x in 0..n {
            for y in 0..n {
                let a = GroundAtom::new("target", &[x.to_string(), y.to_string()]);
                assert_eq!(out.contains(&a), x < y, "{a}");
            }
        }
    }

    #[test]
    fn unknown_body_predicate_is_named() {
        let program = parse_program("t(X) :- ghost(X).", PredicateSymbol::target("t", 1)).unwrap();
        let e = forward_chain(&program, &BTreeSet::new(), &consts(2), 3).unwrap_err();
        assert!(matches!(e, Error::UnknownPredicate(ref p) if p == "ghost"));
    }

    #[test]
    fn head_only_variable_ranges_over_domain() {
        let program = parse_program("t(X,Y) :- zero(X).", PredicateSymbol::target("t", 2)).unwrap();
        let out = forward_chain(&program, &facts("zero(0).\n"), &consts(3), 3).unwrap();
        assert_eq!(out.iter().filter(|a| a.predicate == "t").count(), 3);
    }

    #[test]
    fn true_body_fires_everywhere() {
        let program = parse_program("t(X) :- true.", PredicateSymbol::target("t", 1)).unwrap();
        let out = forward_chain(&program, &BTreeSet::new(), &consts(4), 1).unwrap();
        assert_eq!(out.len(), 4);
        let program = parse_program("t(X) :- false.", PredicateSymbol::target("t", 1)).unwrap();
        assert!(forward_chain(&program, &BTreeSet::new(), &consts(4), 3).unwrap().is_empty());
    }

    #[test]
    fn strata_run_in_order_within_a_pass() {
        let mut program = parse_program(
            "a(X,Y) :- succ(X,Y).\nb(X,Y) :- a(Y,X).\n",
            PredicateSymbol::target("b", 2),
        )
        .unwrap();
        let f = facts("succ(0,1).\n");
        let one = forward_chain(&program, &f, &consts(2), 1).unwrap();
        assert!(!one.iter().any(|a| a.predicate == "b"));
        program.clauses[1].stratum = 1;
        let one = forward_chain(&program, &f, &consts(2), 1).unwrap();
        assert!(one.contains(&GroundAtom::new("b", &["1", "0"])));
    }

    #[test]
    fn equal_builtin_is_opt_in() {
        let program = parse_program("t(X,Y) :- equal(X,Y).", PredicateSymbol::target("t", 2)).unwrap();
        assert!(forward_chain(&program, &BTreeSet::new(), &consts(2), 2).is_err());
        let opts = ChainOptions {
            equal: true,
            ..Default::default()
        };
        let out = forward_chain_with(&program, &BTreeSet::new(), &consts(3), 2, &opts).unwrap();
        assert_eq!(out.atoms.len(), 3);
        assert!(out.fixpoint);
    }

    #[test]
    fn mse_cases() {
        let a = GroundAtom::new::<&str>("t", &["0"]);
        let b = GroundAtom::new::<&str>("t", &["1"]);
        let truth: BTreeMap<_, _> = [(a.clone(), true), (b.clone(), false)].into_iter().collect();
        let same: BTreeMap<_, _> = [(a.clone(), 1.0), (b.clone(), 0.0)].into_iter().collect();
        assert_eq!(mse(&same, &truth).unwrap(), 0.0);
        let half: BTreeMap<_, _> = [(a.clone(), 0.5), (b.clone(), 0.5)].into_iter().collect();
        assert_eq!(mse(&half, &truth).unwrap(), 0.25);
        let short: BTreeMap<_, _> = [(a, 1.0)].into_iter().collect();
        assert!(mse(&short, &truth).is_err());
    }
}
