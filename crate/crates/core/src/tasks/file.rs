//! JSON task files.
//!
//! ```json
//! {
//!   "name": "predecessor",
//!   "constants": ["0", "1", "2"],
//!   "predicates": [{"name": "succ", "arity": 2}],
//!   "background": ["succ(0,1)", "succ(1,2)"],
//!   "positives": ["target(1,0)", "target(2,1)"],
//!   "negatives": ["target(0,0)"],
//!   "target": {"name": "target", "arity": 2}
//! }
//! ```
//!
//! `true` and `false` are added to the predicate list when missing and the
//! `true` fact is implied.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::IlpTask;
use crate::logic::{parse_atom, GroundAtom, PredicateKind, PredicateSymbol, FALSE, TRUE};
use crate::{Error, Result};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Signature {
    name: String,
    arity: usize,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TaskFile {
    #[serde(default)]
    name: Option<String>,
    constants: Vec<String>,
    predicates: Vec<Signature>,
    background: Vec<String>,
    positives: Vec<String>,
    negatives: Vec<String>,
    target: Signature,
}

fn atoms(field: &str, list: &[String]) -> Result<BTreeSet<GroundAtom>> {
    list.iter()
        .enumerate()
        .map(|(i, s)| {
            parse_atom(s).map_err(|e| Error::Schema {
                field: format!("{field}[{i}]"),
                message: e.to_string(),
            })
        })
        .collect()
}

pub fn task_from_json(text: &str) -> Result<IlpTask> {
    let file: TaskFile = serde_json::from_str(text)?;
    let mut predicates = Vec::with_capacity(file.predicates.len() + 2);
    for builtin in [TRUE, FALSE] {
        if !file.predicates.iter().any(|p| p.name == builtin) {
            predicates.push(PredicateSymbol::new(builtin, 0, PredicateKind::Input));
        }
    }
    for (i, p) in file.predicates.iter().enumerate() {
        if p.arity > 2 {
            return Err(Error::Schema {
                field: format!("predicates[{i}]"),
                message: format!("arity {} of `{}` exceeds 2", p.arity, p.name),
            });
        }
        predicates.push(PredicateSymbol::input(p.name.clone(), p.arity));
    }
    if file.target.arity > 2 {
        return Err(Error::Schema {
            field: "target".into(),
            message: format!("arity {} exceeds 2", file.target.arity),
        });
    }
    let mut background = atoms("background", &file.background)?;
    background.insert(GroundAtom::new::<&str>(TRUE, &[]));
    let task = IlpTask {
        name: file.name.unwrap_or_else(|| "task".into()),
        constants: file.constants,
        predicates,
        background,
        positives: atoms("positives", &file.positives)?,
        negatives: atoms("negatives", &file.negatives)?,
        target: PredicateSymbol::target(file.target.name, file.target.arity),
    };
    task.validate()?;
    Ok(task)
}

pub fn task_to_json(task: &IlpTask) -> Result<String> {
    let strings = |s: &BTreeSet<GroundAtom>| s.iter().map(|a| a.to_string()).collect();
    let file = TaskFile {
        name: Some(task.name.clone()),
        constants: task.constants.clone(),
        predicates: task
            .predicates
            .iter()
            .map(|p| Signature {
                name: p.name.clone(),
                arity: p.arity(),
            })
            .collect(),
        background: strings(&task.background),
        positives: strings(&task.positives),
        negatives: strings(&task.negatives),
        target: Signature {
            name: task.target.name.clone(),
            arity: task.target.arity(),
        },
    };
    Ok(serde_json::to_string_pretty(&file)?)
}

pub fn load_task(path: impl AsRef<Path>) -> Result<IlpTask> {
    task_from_json(&std::fs::read_to_string(path)?)
}

pub fn save_task(task: &IlpTask, path: impl AsRef<Path>) -> Result<()> {
    task.validate()?;
    std::fs::write(path, task_to_json(task)? + "\n")?;
    Ok(())
}
