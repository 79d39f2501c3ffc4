//! Differentiable forward chaining over fuzzy valuations.
//!
//! A valuation assigns each ground atom a degree in `[0, 1]`, stored densely
//! per predicate: a scalar, an `n`-vector or a row-major `n x n` matrix.
//! Lower-arity candidates enter a binary slot through [`project`], which
//! broadcasts them over the missing argument.

mod engine;
mod unify;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::logic::{GroundAtom, PredicateSymbol, FALSE, TRUE};
use crate::model::Model;
use crate::tasks::IlpTask;
use crate::{Error, Result, Scalar};

pub use engine::{backward, forward, BackwardOptions, Gradients, TieReport, Trace};
pub use unify::{compute_scores, scores_backward, similarity, unification_scores, SlotScores};

/// Pooling over weighted candidates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pool {
    #[default]
    Sum,
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AndOp {
    #[default]
    Min,
    Product,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrOp {
    #[default]
    Max,
    /// `a + b - a*b`
    ProdMinus,
}

/// Score between a slot embedding and a predicate embedding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Similarity {
    #[default]
    Cosine,
    /// Negated L1 distance.
    L1,
    /// Negated Euclidean distance.
    L2,
    /// Raw dot product.
    ScalarProduct,
}

/// Fuzzy operator choices. Merging with the previous valuation is always
/// `max`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct OperatorConfig {
    pub pool: Pool,
    pub and_op: AndOp,
    pub or_op: OrOp,
    pub similarity: Similarity,
}

impl OperatorConfig {
    /// The default operators and the three single-operator variants.
    pub fn ablation_set() -> [OperatorConfig; 4] {
        let d = OperatorConfig::default();
        [
            d,
            OperatorConfig { pool: Pool::Max, ..d },
            OperatorConfig { and_op: AndOp::Product, ..d },
            OperatorConfig { or_op: OrOp::ProdMinus, ..d },
        ]
    }
}

macro_rules! parse_enum {
    ($ty:ty, $what:literal, { $($s:literal => $v:expr),+ $(,)? }) => {
        impl FromStr for $ty {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s.trim().to_ascii_lowercase().replace('_', "-").as_str() {
                    $($s => Ok($v),)+
                    other => Err(Error::InvalidConfig(format!(concat!("unknown ", $what, " `{}`"), other))),
                }
            }
        }
    };
}

parse_enum!(Pool, "pool", { "sum" => Pool::Sum, "max" => Pool::Max });
parse_enum!(AndOp, "fuzzy-and", { "min" => AndOp::Min, "product" => AndOp::Product, "prod" => AndOp::Product });
parse_enum!(OrOp, "fuzzy-or", { "max" => OrOp::Max, "prodminus" => OrOp::ProdMinus });
parse_enum!(Similarity, "similarity", {
    "cosine" => Similarity::Cosine,
    "l1" => Similarity::L1,
    "l2" => Similarity::L2,
    "scalar-product" => Similarity::ScalarProduct,
    "scalarproduct" => Similarity::ScalarProduct,
    "dot" => Similarity::ScalarProduct,
});

/// Broadcasts a valuation of arity `arity` to an `n x n` matrix:
/// binary is copied, unary `v[x]` becomes `m[x][z] = v[x]`, zero-ary fills.
pub fn project<S: Scalar>(values: &[S], arity: usize, n: usize) -> Vec<S> {
    let mut out = vec![S::zero(); n * n];
    project_into(values, arity, n, &mut out);
    out
}

pub(crate) fn project_into<S: Scalar>(values: &[S], arity: usize, n: usize, out: &mut [S]) {
    match arity {
        2 => out.copy_from_slice(&values[..n * n]),
        1 => {
            for x in 0..n {
                out[x * n..(x + 1) * n].fill(values[x]);
            }
        }
        _ => out.fill(values[0]),
    }
}

/// Degrees of every model predicate plus the target.
#[derive(Clone, Debug, PartialEq)]
pub struct ValuationState<S> {
    pub n: usize,
    /// One tensor per model predicate, indexed like [`Model::predicates`].
    pub values: Vec<Vec<S>>,
    pub target: Vec<S>,
}

impl<S: Scalar> ValuationState<S> {
    /// Inputs from the instance, everything else zero.
    pub fn initial(model: &Model<S>, instance: &Instance<S>) -> Self {
        let n = instance.n;
        let mut values: Vec<Vec<S>> = instance.inputs.clone();
        for p in &model.predicates[model.num_inputs..] {
            values.push(vec![S::zero(); n.pow(p.arity() as u32)]);
        }
        Self {
            n,
            values,
            target: vec![S::zero(); n.pow(model.target.arity() as u32)],
        }
    }

    /// Smallest and largest entry over all tensors.
    pub fn range(&self) -> (S, S) {
        let mut lo = S::infinity();
        let mut hi = S::neg_infinity();
        for v in self.values.iter().chain(std::iter::once(&self.target)).flatten() {
            lo = lo.min(*v);
            hi = hi.max(*v);
        }
        (lo, hi)
    }

    /// `atom = value` lines for every atom with a nonzero degree, in model
    /// predicate order followed by the target.
    pub fn dump(&self, model: &Model<S>, constants: &[String]) -> String {
        let mut out = String::new();
        let mut emit = |name: &str, arity: usize, vals: &[S]| {
            for (off, v) in vals.iter().enumerate() {
                if v.is_zero() {
                    continue;
                }
                let atom = atom_at(name, arity, off, constants);
                let _ = writeln!(out, "{atom} = {v}");
            }
        };
        for (p, vals) in model.predicates.iter().zip(&self.values) {
            emit(&p.name, p.arity(), vals);
        }
        emit(&model.target.name, model.target.arity(), &self.target);
        out
    }

    /// Target degrees keyed by atom.
    pub fn target_map(&self, target: &PredicateSymbol, constants: &[String]) -> BTreeMap<GroundAtom, f64> {
        self.target
            .iter()
            .enumerate()
            .map(|(off, v)| (atom_at(&target.name, target.arity(), off, constants), v.as_f64()))
            .collect()
    }
}

pub(crate) fn atom_at(name: &str, arity: usize, off: usize, constants: &[String]) -> GroundAtom {
    let n = constants.len();
    match arity {
        0 => GroundAtom::new::<&str>(name, &[]),
        1 => GroundAtom::new(name, &[&constants[off]]),
        _ => GroundAtom::new(name, &[&constants[off / n], &constants[off % n]]),
    }
}

/// A task grounded against a model's input signature.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance<S> {
    pub n: usize,
    pub constants: Vec<String>,
    /// Initial tensor per model input predicate.
    pub inputs: Vec<Vec<S>>,
    pub target: PredicateSymbol,
    /// Label per target grounding (row-major), `None` when unlabelled.
    pub labels: Vec<Option<bool>>,
}

impl<S: Scalar> Instance<S> {
    pub fn new(task: &IlpTask, inputs: &[PredicateSymbol]) -> Result<Self> {
        let n = task.constants.len();
        let cindex: BTreeMap<&str, usize> = task
            .constants
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        let offset = |atom: &GroundAtom| -> Result<usize> {
            atom.args.iter().try_fold(0, |acc, a| {
                cindex
                    .get(a.as_str())
                    .map(|&c| acc * n + c)
                    .ok_or_else(|| Error::UnknownConstant(a.clone()))
            })
        };
        let mut tensors: Vec<Vec<S>> = inputs
            .iter()
            .map(|p| vec![S::zero(); n.pow(p.arity() as u32)])
            .collect();
        for (i, p) in inputs.iter().enumerate() {
            match task.input_predicate(&p.name) {
                Some(q) if q.arity() == p.arity() => {}
                Some(q) => {
                    return Err(Error::ArityMismatch {
                        predicate: p.name.clone(),
                        expected: p.arity(),
                        found: q.arity(),
                    })
                }
                None if p.name == TRUE || p.name == FALSE => {}
                None => return Err(Error::UnknownPredicate(p.name.clone())),
            }
            if p.name == TRUE {
                tensors[i][0] = S::one();
            }
        }
        for atom in &task.background {
            let i = inputs
                .iter()
                .position(|p| p.name == atom.predicate)
                .ok_or_else(|| Error::UnknownPredicate(atom.predicate.clone()))?;
            if inputs[i].arity() != atom.arity() {
                return Err(Error::ArityMismatch {
                    predicate: atom.predicate.clone(),
                    expected: inputs[i].arity(),
                    found: atom.arity(),
                });
            }
            if inputs[i].name == FALSE {
                continue;
            }
            tensors[i][offset(atom)?] = S::one();
        }
        let mut labels = vec![None; n.pow(task.target.arity() as u32)];
        for (set, label) in [(&task.positives, true), (&task.negatives, false)] {
            for atom in set {
                labels[offset(atom)?] = Some(label);
            }
        }
        Ok(Self {
            n,
            constants: task.constants.clone(),
            inputs: tensors,
            target: task.target.clone(),
            labels,
        })
    }

    /// Mean squared error of target degrees over labelled groundings.
    pub fn mse(&self, target: &[S]) -> f64 {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (v, l) in target.iter().zip(&self.labels) {
            if let Some(l) = l {
                let d = v.as_f64() - if *l { 1.0 } else { 0.0 };
                sum += d * d;
                count += 1;
            }
        }
        if count == 0 {
            0.0
        } else {
            sum / count as f64
        }
    }
}

/// One soft step for a single auxiliary predicate, every candidate read from
/// `state`. Returns the merged valuation.
pub fn infer_step_aux<S: Scalar>(
    model: &Model<S>,
    aux: usize,
    state: &ValuationState<S>,
    scores: &SlotScores<S>,
) -> Vec<S> {
    engine::aux_forward(model, aux, &state.values, scores, |p| model.predicates[p].is_false()).v_new
}

/// Target update from the top layer: `max(old, pool(alpha * v))`.
pub fn infer_target<S: Scalar>(model: &Model<S>, state: &ValuationState<S>, scores: &SlotScores<S>) -> Vec<S> {
    engine::target_forward(model, &state.values, &state.target, scores).0
}

/// `steps` noise-free inference passes from the instance's facts.
pub fn run_inference<S: Scalar>(model: &Model<S>, instance: &Instance<S>, steps: usize) -> Result<ValuationState<S>> {
    let scores = compute_scores(model, None)?;
    Ok(run_with_scores(model, &scores, instance, steps))
}

/// Inference with externally supplied unification scores.
pub fn run_with_scores<S: Scalar>(
    model: &Model<S>,
    scores: &SlotScores<S>,
    instance: &Instance<S>,
    steps: usize,
) -> ValuationState<S> {
    let mut trace = forward(model, scores, instance, steps, false);
    trace.states.pop().expect("at least the initial state")
}
