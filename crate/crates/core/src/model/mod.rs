//! Hierarchical hypothesis space: proto-rules, layered auxiliary predicates,
//! candidate sets and the embedding tables.

mod checkpoint;

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::inference::OperatorConfig;
use crate::logic::{PredicateKind, PredicateSymbol, FALSE, TRUE};
use crate::{Error, Result, Scalar};

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION};

/// Body shape of a proto-rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RuleShape {
    /// `H(X) <- B1(X,Y), B2(Y,X)`
    A,
    /// `H(X,Y) <- B1(X,Z), B2(Z,Y)`
    B,
    /// `H(X,Y) <- B1(X,Y), B2(Y,X)`
    C,
    /// `H(X,Y) <- F(Y,X)`
    I,
}

/// A proto-rule: a shape plus whether it carries the extra disjunct slot
/// (`B3(X,T)` for `A`, `B3(X,Y)` for `B` and `C`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProtoRule {
    pub shape: RuleShape,
    pub disjunct: bool,
}

impl ProtoRule {
    pub fn head_arity(self) -> usize {
        match self.shape {
            RuleShape::A => 1,
            _ => 2,
        }
    }

    pub fn num_slots(self) -> usize {
        match (self.shape, self.disjunct) {
            (RuleShape::I, _) => 1,
            (_, true) => 3,
            (_, false) => 2,
        }
    }

    /// Whether the rule has a two-literal conjunction.
    pub fn has_conjunction(self) -> bool {
        self.shape != RuleShape::I
    }

    /// Index of the slot pooled on its own (disjunct, or the single `I` slot).
    pub fn single_slot(self) -> Option<usize> {
        match (self.shape, self.disjunct) {
            (RuleShape::I, _) => Some(0),
            (_, true) => Some(2),
            (_, false) => None,
        }
    }

    pub fn letter(self) -> char {
        match self.shape {
            RuleShape::A => 'a',
            RuleShape::B => 'b',
            RuleShape::C => 'c',
            RuleShape::I => 'i',
        }
    }
}

impl fmt::Display for ProtoRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let base = self.letter().to_ascii_uppercase();
        if self.disjunct {
            write!(f, "{base}*")
        } else {
            write!(f, "{base}")
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ProtoSet {
    /// Conjunctive `A`, `B`, `C`.
    R0,
    /// `A*`, `B*`, `C*`.
    R0Or,
    /// `A*`, `B*`, `C*` and the permutation rule `I`.
    #[default]
    RStar,
}

impl ProtoSet {
    pub fn rules(self) -> Vec<ProtoRule> {
        let d = self != ProtoSet::R0;
        let mut out: Vec<ProtoRule> = [RuleShape::A, RuleShape::B, RuleShape::C]
            .into_iter()
            .map(|shape| ProtoRule { shape, disjunct: d })
            .collect();
        if self == ProtoSet::RStar {
            out.push(ProtoRule {
                shape: RuleShape::I,
                disjunct: false,
            });
        }
        out
    }
}

impl FromStr for ProtoSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "r0" => Ok(ProtoSet::R0),
            "r0or" | "r0v" | "r0-or" => Ok(ProtoSet::R0Or),
            "r*" | "rstar" | "r-star" => Ok(ProtoSet::RStar),
            other => Err(Error::InvalidConfig(format!("unknown proto-rule set `{other}`"))),
        }
    }
}

/// Which predicates an auxiliary predicate of layer `l` may call.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Recursivity {
    /// Strictly lower layers.
    None,
    /// Lower layers and itself.
    Iso,
    /// Lower layers and its own layer.
    #[default]
    Full,
}

impl FromStr for Recursivity {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(Recursivity::None),
            "iso" => Ok(Recursivity::Iso),
            "full" => Ok(Recursivity::Full),
            other => Err(Error::InvalidConfig(format!("unknown recursivity `{other}`"))),
        }
    }
}

impl fmt::Display for Recursivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Recursivity::None => "none",
            Recursivity::Iso => "iso",
            Recursivity::Full => "full",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Number of auxiliary layers `n_L`.
    pub max_depth: usize,
    /// `None` picks `max(16, |inputs| + |aux|)`.
    pub embedding_dim: Option<usize>,
    /// Standard deviation of the initial embeddings; `None` gives `1/sqrt(d)`.
    #[serde(default)]
    pub init_std: Option<f64>,
    pub recursivity: Recursivity,
    pub temperature: f64,
    pub proto_set: ProtoSet,
    pub aux_per_rule: usize,
    pub operators: OperatorConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            max_depth: 4,
            embedding_dim: None,
            init_std: None,
            recursivity: Recursivity::Full,
            temperature: 0.1,
            proto_set: ProtoSet::RStar,
            aux_per_rule: 1,
            operators: OperatorConfig::default(),
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth < 1 {
            return Err(Error::InvalidConfig("max-depth must be at least 1".into()));
        }
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return Err(Error::InvalidConfig("temperature must be positive".into()));
        }
        if self.aux_per_rule < 1 {
            return Err(Error::InvalidConfig("aux-per-rule must be at least 1".into()));
        }
        if matches!(self.init_std, Some(s) if !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidConfig("init-std must be positive".into()));
        }
        if matches!(self.embedding_dim, Some(d) if d < 2) {
            return Err(Error::InvalidConfig("embedding dimension must be at least 2".into()));
        }
        Ok(())
    }
}

/// One auxiliary predicate and its rule slots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuxPredicate {
    /// Index into [`Model::predicates`].
    pub predicate: usize,
    pub layer: usize,
    pub rule: ProtoRule,
    /// Predicate indices every slot of this rule is matched against.
    pub candidates: Vec<usize>,
    /// Index of the first slot in the slot table.
    pub first_slot: usize,
}

impl AuxPredicate {
    pub fn slots(&self) -> std::ops::Range<usize> {
        self.first_slot..self.first_slot + self.rule.num_slots()
    }
}

/// The full hypothesis space with its learnable embeddings.
///
/// Embeddings are stored row-major in two flat tables: one row per predicate
/// (inputs first, then auxiliaries by layer) and one row per rule slot, with
/// the target slot last.
#[derive(Clone, Debug, PartialEq)]
pub struct Model<S> {
    pub config: ModelConfig,
    pub dim: usize,
    pub predicates: Vec<PredicateSymbol>,
    pub num_inputs: usize,
    pub aux: Vec<AuxPredicate>,
    pub target: PredicateSymbol,
    /// Layer `n_L` auxiliaries with the target's arity.
    pub target_candidates: Vec<usize>,
    pub predicate_embeddings: Vec<S>,
    pub slot_embeddings: Vec<S>,
}

/// Builds the layered model. Embeddings are i.i.d. `N(0, init_std²)`.
pub fn build_model<S: Scalar>(
    config: &ModelConfig,
    inputs: &[PredicateSymbol],
    target: &PredicateSymbol,
    seed: u64,
) -> Result<Model<S>> {
    let mut model = build_structure(config, inputs, target)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = config.init_std.unwrap_or(1.0 / (model.dim as f64).sqrt());
    for v in model
        .predicate_embeddings
        .iter_mut()
        .chain(model.slot_embeddings.iter_mut())
    {
        let z: f64 = StandardNormal.sample(&mut rng);
        *v = S::lit(z * scale);
    }
    Ok(model)
}

/// Model layout with all-zero embeddings.
pub(crate) fn build_structure<S: Scalar>(
    config: &ModelConfig,
    inputs: &[PredicateSymbol],
    target: &PredicateSymbol,
) -> Result<Model<S>> {
    config.validate()?;
    for required in [TRUE, FALSE] {
        if !inputs.iter().any(|p| p.name == required && p.arity() == 0) {
            return Err(Error::InvalidConfig(format!("inputs must include zero-ary `{required}`")));
        }
    }
    if !(1..=2).contains(&target.arity()) {
        return Err(Error::InvalidConfig("target must be unary or binary".into()));
    }
    let mut predicates: Vec<PredicateSymbol> = inputs
        .iter()
        .map(|p| PredicateSymbol::new(p.name.clone(), p.arity(), PredicateKind::Input))
        .collect();
    if predicates.iter().any(|p| p.name == target.name) {
        return Err(Error::InvalidConfig(format!(
            "target `{}` clashes with an input predicate",
            target.name
        )));
    }
    let num_inputs = predicates.len();
    let rules = config.proto_set.rules();
    let mut aux = Vec::new();
    let mut slot = 0;
    for layer in 1..=config.max_depth {
        for rule in &rules {
            for k in 0..config.aux_per_rule {
                let name = format!("l{layer}_{}{k}", rule.letter());
                aux.push(AuxPredicate {
                    predicate: predicates.len(),
                    layer,
                    rule: *rule,
                    candidates: Vec::new(),
                    first_slot: slot,
                });
                slot += rule.num_slots();
                predicates.push(PredicateSymbol::new(name, rule.head_arity(), PredicateKind::Auxiliary));
            }
        }
    }
    let layer_of = |p: usize| if p < num_inputs { 0 } else { aux[p - num_inputs].layer };
    let mut all_candidates = Vec::with_capacity(aux.len());
    for a in &aux {
        let cands: Vec<usize> = (0..predicates.len())
            .filter(|&p| {
                let l = layer_of(p);
                l < a.layer
                    || match config.recursivity {
                        Recursivity::None => false,
                        Recursivity::Iso => p == a.predicate,
                        Recursivity::Full => l == a.layer,
                    }
            })
            .collect();
        all_candidates.push(cands);
    }
    for (a, c) in aux.iter_mut().zip(all_candidates) {
        a.candidates = c;
    }
    let target_candidates: Vec<usize> = aux
        .iter()
        .filter(|a| a.layer == config.max_depth && a.rule.head_arity() == target.arity())
        .map(|a| a.predicate)
        .collect();
    if target_candidates.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "no top-layer auxiliary predicate has arity {}",
            target.arity()
        )));
    }
    let num_slots = slot + 1;
    let dim = config
        .embedding_dim
        .unwrap_or_else(|| 16.max(predicates.len()));
    Ok(Model {
        config: config.clone(),
        dim,
        num_inputs,
        target: PredicateSymbol::target(target.name.clone(), target.arity()),
        target_candidates,
        predicate_embeddings: vec![S::zero(); predicates.len() * dim],
        slot_embeddings: vec![S::zero(); num_slots * dim],
        predicates,
        aux,
    })
}

impl<S: Scalar> Model<S> {
    pub fn num_slots(&self) -> usize {
        self.slot_embeddings.len() / self.dim
    }

    pub fn target_slot(&self) -> usize {
        self.num_slots() - 1
    }

    pub fn layer_of(&self, predicate: usize) -> usize {
        if predicate < self.num_inputs {
            0
        } else {
            self.aux[predicate - self.num_inputs].layer
        }
    }

    pub fn inputs(&self) -> &[PredicateSymbol] {
        &self.predicates[..self.num_inputs]
    }

    pub fn predicate_index(&self, name: &str) -> Option<usize> {
        self.predicates.iter().position(|p| p.name == name)
    }

    /// Candidate set of an auxiliary predicate, by predicate index.
    pub fn candidate_set(&self, predicate: usize) -> Option<&[usize]> {
        predicate
            .checked_sub(self.num_inputs)
            .and_then(|i| self.aux.get(i))
            .map(|a| a.candidates.as_slice())
    }

    /// Candidate list of a slot; the target slot maps to the top layer.
    pub fn slot_candidates(&self, slot: usize) -> &[usize] {
        if slot == self.target_slot() {
            return &self.target_candidates;
        }
        let i = self.aux.partition_point(|a| a.first_slot + a.rule.num_slots() <= slot);
        &self.aux[i].candidates
    }

    /// Auxiliary predicates of one layer.
    pub fn layer(&self, layer: usize) -> impl Iterator<Item = &AuxPredicate> {
        self.aux.iter().filter(move |a| a.layer == layer)
    }

    pub fn predicate_embedding(&self, p: usize) -> &[S] {
        &self.predicate_embeddings[p * self.dim..(p + 1) * self.dim]
    }

    pub fn predicate_embedding_mut(&mut self, p: usize) -> &mut [S] {
        &mut self.predicate_embeddings[p * self.dim..(p + 1) * self.dim]
    }

    pub fn slot_embedding(&self, s: usize) -> &[S] {
        &self.slot_embeddings[s * self.dim..(s + 1) * self.dim]
    }

    pub fn slot_embedding_mut(&mut self, s: usize) -> &mut [S] {
        &mut self.slot_embeddings[s * self.dim..(s + 1) * self.dim]
    }

    pub fn num_parameters(&self) -> usize {
        self.predicate_embeddings.len() + self.slot_embeddings.len()
    }

    /// Owner name and position of a slot (the target slot is `(target, 0)`).
    pub fn slot_owner(&self, slot: usize) -> (&str, usize) {
        if slot == self.target_slot() {
            return (&self.target.name, 0);
        }
        let i = self.aux.partition_point(|a| a.first_slot + a.rule.num_slots() <= slot);
        let a = &self.aux[i];
        (&self.predicates[a.predicate].name, slot - a.first_slot)
    }

    /// Replaces every embedding by a one-hot vector so that each slot matches
    /// exactly one predicate. `choices` lists `(owner, position, predicate)`;
    /// slots not listed pick `false` (or their first candidate).
    pub fn align_one_hot(&mut self, choices: &[(&str, usize, &str)]) -> Result<()> {
        let np = self.predicates.len();
        if self.dim < np {
            return Err(Error::InvalidConfig(format!(
                "one-hot alignment needs dimension {np}, model has {}",
                self.dim
            )));
        }
        for &(owner, position, _) in choices {
            let known = (0..self.num_slots()).any(|s| self.slot_owner(s) == (owner, position));
            if !known {
                return Err(Error::UnknownPredicate(format!("{owner} slot {position}")));
            }
        }
        let false_idx = self.predicate_index(FALSE);
        let mut picks = Vec::with_capacity(self.num_slots());
        for s in 0..self.num_slots() {
            let cands = self.slot_candidates(s);
            let (owner, position) = self.slot_owner(s);
            let pick = match choices.iter().find(|c| (c.0, c.1) == (owner, position)) {
                Some(&(_, _, name)) => {
                    let p = self
                        .predicate_index(name)
                        .ok_or_else(|| Error::UnknownPredicate(name.to_string()))?;
                    if !cands.contains(&p) {
                        return Err(Error::InvalidConfig(format!("`{name}` is not a candidate of {owner} slot {position}")));
                    }
                    p
                }
                None => false_idx.filter(|f| cands.contains(f)).unwrap_or(cands[0]),
            };
            picks.push(pick);
        }
        let dim = self.dim;
        let one_hot = |k: usize| (0..dim).map(move |i| if i == k { S::one() } else { S::zero() });
        self.predicate_embeddings = (0..np).flat_map(one_hot).collect();
        self.slot_embeddings = picks.into_iter().flat_map(one_hot).collect();
        Ok(())
    }

    /// Same model with every embedding converted to another scalar type.
    pub fn cast<T: Scalar>(&self) -> Model<T> {
        let conv = |v: &[S]| v.iter().map(|x| T::lit(x.as_f64())).collect();
        Model {
            config: self.config.clone(),
            dim: self.dim,
            predicates: self.predicates.clone(),
            num_inputs: self.num_inputs,
            aux: self.aux.clone(),
            target: self.target.clone(),
            target_candidates: self.target_candidates.clone(),
            predicate_embeddings: conv(&self.predicate_embeddings),
            slot_embeddings: conv(&self.slot_embeddings),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::with_builtins;

    fn inputs(extra: &[(&str, usize)]) -> Vec<PredicateSymbol> {
        with_builtins(extra)
    }

    #[test]
    fn r_star_four_layers_has_sixteen_aux() {
        let cfg = ModelConfig::default();
        let m: Model<f64> = build_model(&cfg, &inputs(&[("succ", 2)]), &PredicateSymbol::target("target", 2), 0).unwrap();
        assert_eq!(m.aux.len(), 16);
        assert_eq!(m.num_slots(), 4 * (3 + 3 + 3 + 1) + 1);
        assert_eq!(m.target_candidates.len(), 3);
    }

    #[test]
    fn r0_two_layers() {
        let cfg = ModelConfig {
            max_depth: 2,
            proto_set: ProtoSet::R0,
            ..ModelConfig::default()
        };
        let m: Model<f32> = build_model(&cfg, &inputs(&[]), &PredicateSymbol::target("t", 1), 0).unwrap();
        assert_eq!(m.aux.len(), 6);
        assert!(m.aux.iter().all(|a| a.rule.num_slots() == 2));
    }

    #[test]
    fn candidate_sets_by_mode() {
        let ins = inputs(&[("p", 1), ("q", 2), ("r", 2)]);
        let tgt = PredicateSymbol::target("target", 2);
        let mk = |recursivity| {
            let cfg = ModelConfig {
                recursivity,
                ..ModelConfig::default()
            };
            build_model::<f64>(&cfg, &ins, &tgt, 1).unwrap()
        };
        let none = mk(Recursivity::None);
        let first = none.aux[0].predicate;
        assert_eq!(none.candidate_set(first).unwrap(), &[0, 1, 2, 3, 4]);
        let iso = mk(Recursivity::Iso);
        assert_eq!(iso.candidate_set(first).unwrap(), &[0, 1, 2, 3, 4, first]);
        let full = mk(Recursivity::Full);
        let second_layer = full.layer(2).next().unwrap().predicate;
        assert_eq!(full.candidate_set(second_layer).unwrap().len(), 5 + 4 + 4);
    }

    #[test]
    fn slot_lookup_matches_ranges() {
        let m: Model<f64> = build_model(
            &ModelConfig::default(),
            &inputs(&[("e", 2)]),
            &PredicateSymbol::target("t", 1),
            3,
        )
        .unwrap();
        for a in &m.aux {
            for s in a.slots() {
                assert_eq!(m.slot_candidates(s), a.candidates.as_slice());
            }
        }
        assert_eq!(m.slot_candidates(m.target_slot()), m.target_candidates.as_slice());
    }

    #[test]
    fn seeds_reproduce() {
        let ins = inputs(&[("e", 2)]);
        let t = PredicateSymbol::target("t", 2);
        let a: Model<f64> = build_model(&ModelConfig::default(), &ins, &t, 5).unwrap();
        let b: Model<f64> = build_model(&ModelConfig::default(), &ins, &t, 5).unwrap();
        let c: Model<f64> = build_model(&ModelConfig::default(), &ins, &t, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn missing_builtins_rejected() {
        let r = build_model::<f64>(
            &ModelConfig::default(),
            &[PredicateSymbol::input("e", 2)],
            &PredicateSymbol::target("t", 2),
            0,
        );
        assert!(r.is_err());
    }
}
