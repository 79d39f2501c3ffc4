//! First-order data model and a crisp bottom-up evaluator.
//!
//! Programs live in the function-free definite-clause fragment with at most
//! two body literals over predicates of arity 0, 1 or 2. The evaluator is the
//! ground truth the soft model is checked against.

mod chain;
mod normalize;
mod text;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use chain::{forward_chain, forward_chain_with, mse, ChainOptions, ChainOutcome};
pub use normalize::normalize_aux_clause;
pub use text::{parse_atom, parse_clause, parse_program, parse_rules, program_to_text};

/// Name of the always-true zero-ary predicate.
pub const TRUE: &str = "true";
/// Name of the always-false zero-ary predicate.
pub const FALSE: &str = "false";
/// Name of the optional equality builtin.
pub const EQUAL: &str = "equal";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PredicateKind {
    Input,
    Auxiliary,
    Target,
}

/// A predicate of arity 0, 1 or 2.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PredicateSymbol {
    pub name: String,
    arity: u8,
    pub kind: PredicateKind,
}

impl PredicateSymbol {
    /// # Panics
    /// If `arity > 2`.
    pub fn new(name: impl Into<String>, arity: usize, kind: PredicateKind) -> Self {
        assert!(arity <= 2, "arity {arity} outside the supported fragment");
        Self {
            name: name.into(),
            arity: arity as u8,
            kind,
        }
    }

    pub fn input(name: impl Into<String>, arity: usize) -> Self {
        Self::new(name, arity, PredicateKind::Input)
    }

    pub fn target(name: impl Into<String>, arity: usize) -> Self {
        Self::new(name, arity, PredicateKind::Target)
    }

    pub fn arity(&self) -> usize {
        self.arity as usize
    }

    pub fn is_true(&self) -> bool {
        self.name == TRUE
    }

    pub fn is_false(&self) -> bool {
        self.name == FALSE
    }
}

/// Clause variables. Head variables are `X` and `Y`, existentials `Z` and `T`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Var {
    X,
    Y,
    Z,
    T,
}

impl Var {
    pub const ALL: [Var; 4] = [Var::X, Var::Y, Var::Z, Var::T];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_char(c: char) -> Option<Var> {
        match c {
            'X' => Some(Var::X),
            'Y' => Some(Var::Y),
            'Z' => Some(Var::Z),
            'T' => Some(Var::T),
            _ => None,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = match self {
            Var::X => "X",
            Var::Y => "Y",
            Var::Z => "Z",
            Var::T => "T",
        };
        f.write_str(c)
    }
}

/// A predicate applied to variables.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Literal {
    pub predicate: String,
    pub args: Vec<Var>,
}

impl Literal {
    pub fn new(predicate: impl Into<String>, args: &[Var]) -> Self {
        Self {
            predicate: predicate.into(),
            args: args.to_vec(),
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }

    pub fn is_true(&self) -> bool {
        self.predicate == TRUE
    }

    pub fn is_false(&self) -> bool {
        self.predicate == FALSE
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if !self.args.is_empty() {
            f.write_str("(")?;
            for (i, v) in self.args.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, "{v}")?;
            }
            f.write_str(")")?;
        }
        Ok(())
    }
}

/// A predicate applied to constants.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroundAtom {
    pub predicate: String,
    pub args: Vec<String>,
}

impl GroundAtom {
    pub fn new<S: AsRef<str>>(predicate: impl Into<String>, args: &[S]) -> Self {
        Self {
            predicate: predicate.into(),
            args: args.iter().map(|a| a.as_ref().to_string()).collect(),
        }
    }

    pub fn arity(&self) -> usize {
        self.args.len()
    }
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.predicate)?;
        if !self.args.is_empty() {
            write!(f, "({})", self.args.join(","))?;
        }
        Ok(())
    }
}

impl std::str::FromStr for GroundAtom {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        parse_atom(s)
    }
}

/// `head :- body.` with one or two body literals.
///
/// `stratum` orders clauses inside one forward-chaining pass: lower strata
/// fire first and later strata see their conclusions within the same pass.
/// Clauses sharing a stratum fire simultaneously. It is not part of the text
/// format.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DefiniteClause {
    pub head: Literal,
    pub body: Vec<Literal>,
    #[serde(default)]
    pub stratum: usize,
}

impl DefiniteClause {
    pub fn new(head: Literal, body: Vec<Literal>) -> Self {
        Self {
            head,
            body,
            stratum: 0,
        }
    }

    pub fn with_stratum(mut self, stratum: usize) -> Self {
        self.stratum = stratum;
        self
    }

    /// Distinct variables in first-occurrence order: head, then body.
    pub fn variables(&self) -> Vec<Var> {
        let mut out = Vec::with_capacity(4);
        for v in self
            .head
            .args
            .iter()
            .chain(self.body.iter().flat_map(|l| l.args.iter()))
        {
            if !out.contains(v) {
                out.push(*v);
            }
        }
        out
    }
}

impl fmt::Display for DefiniteClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} :- ", self.head)?;
        for (i, l) in self.body.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{l}")?;
        }
        f.write_str(".")
    }
}

/// A set of definite clauses defining `target`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolicProgram {
    pub clauses: Vec<DefiniteClause>,
    pub target: PredicateSymbol,
}

impl SymbolicProgram {
    pub fn new(target: PredicateSymbol, clauses: Vec<DefiniteClause>) -> Self {
        Self { clauses, target }
    }

    pub fn empty(target: PredicateSymbol) -> Self {
        Self::new(target, Vec::new())
    }

    /// Predicates defined by at least one clause head.
    pub fn defined_predicates(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for c in &self.clauses {
            if !out.contains(&c.head.predicate.as_str()) {
                out.push(&c.head.predicate);
            }
        }
        out
    }
}

impl fmt::Display for SymbolicProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&program_to_text(self))
    }
}
