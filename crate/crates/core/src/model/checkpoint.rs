//! JSON checkpoints: configuration, signature and every embedding.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{build_structure, Model, ModelConfig};
use crate::logic::PredicateSymbol;
use crate::{Error, Result, Scalar};

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: ModelConfig,
    pub dim: usize,
    pub inputs: Vec<PredicateSymbol>,
    pub target: PredicateSymbol,
    /// Task the model was trained on, when known.
    #[serde(default)]
    pub task: Option<String>,
    pub predicate_embeddings: Vec<f64>,
    pub slot_embeddings: Vec<f64>,
}

impl Checkpoint {
    pub fn from_model<S: Scalar>(model: &Model<S>, task: Option<&str>) -> Self {
        Self {
            version: CHECKPOINT_VERSION,
            config: model.config.clone(),
            dim: model.dim,
            inputs: model.inputs().to_vec(),
            target: model.target.clone(),
            task: task.map(str::to_string),
            predicate_embeddings: model.predicate_embeddings.iter().map(|v| v.as_f64()).collect(),
            slot_embeddings: model.slot_embeddings.iter().map(|v| v.as_f64()).collect(),
        }
    }

    pub fn into_model<S: Scalar>(self) -> Result<Model<S>> {
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported version {} (expected {CHECKPOINT_VERSION})",
                self.version
            )));
        }
        let mut config = self.config.clone();
        config.embedding_dim = Some(self.dim);
        let mut model: Model<S> = build_structure(&config, &self.inputs, &self.target)?;
        model.config = self.config;
        for (name, stored, slot) in [
            ("predicate", &self.predicate_embeddings, &mut model.predicate_embeddings),
            ("slot", &self.slot_embeddings, &mut model.slot_embeddings),
        ] {
            if stored.len() != slot.len() {
                return Err(Error::Checkpoint(format!(
                    "{name} table has {} entries, the configuration implies {}",
                    stored.len(),
                    slot.len()
                )));
            }
            for (dst, &src) in slot.iter_mut().zip(stored) {
                *dst = S::lit(src);
            }
        }
        Ok(model)
    }
}

pub fn save_checkpoint<S: Scalar>(model: &Model<S>, task: Option<&str>, path: impl AsRef<Path>) -> Result<()> {
    let json = serde_json::to_string(&Checkpoint::from_model(model, task))?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_checkpoint<S: Scalar>(path: impl AsRef<Path>) -> Result<(Model<S>, Option<String>)> {
    let ck: Checkpoint = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let task = ck.task.clone();
    Ok((ck.into_model()?, task))
}
