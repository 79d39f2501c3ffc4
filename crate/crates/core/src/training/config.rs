//! `key = value` configuration files.
//!
//! ```text
//! # comment
//! recursivity = full
//! fuzzy-and = min
//! max-depth = 4
//! ```

use serde::{Deserialize, Serialize};

use super::{GumbelDecay, GumbelVariant, OptimizerKind, TrainConfig};
use crate::model::ModelConfig;
use crate::tasks::TaskName;
use crate::{Error, Result};

/// Everything a config file can set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigFile {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub eval_steps: usize,
    pub eval_constants: usize,
}

impl ConfigFile {
    /// Defaults with the task's depth, step counts and instance sizes.
    pub fn for_task(name: TaskName) -> Self {
        let p = name.profile();
        Self {
            model: ModelConfig {
                max_depth: p.max_depth,
                ..ModelConfig::default()
            },
            train: TrainConfig::for_task(name),
            eval_steps: p.eval_steps,
            eval_constants: p.eval_constants,
        }
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| Error::InvalidConfig(format!("`{key}` expects a number, got `{v}`")))
        };
        let int = |v: &str| -> Result<usize> {
            v.parse::<usize>()
                .map_err(|_| Error::InvalidConfig(format!("`{key}` expects an integer, got `{v}`")))
        };
        let m = &mut self.model;
        let t = &mut self.train;
        match key {
            "recursivity" => m.recursivity = value.parse()?,
            "fuzzy-and" => m.operators.and_op = value.parse()?,
            "fuzzy-or" => m.operators.or_op = value.parse()?,
            "pool" => m.operators.pool = value.parse()?,
            "similarity" => m.operators.similarity = value.parse()?,
            "temperature" => m.temperature = num(value)?,
            "max-depth" => m.max_depth = int(value)?,
            "embedding-dim" => {
                m.embedding_dim = match value {
                    "auto" => None,
                    v => Some(int(v)?),
                }
            }
            "init-std" => {
                m.init_std = match value {
                    "auto" => None,
                    v => Some(num(v)?),
                }
            }
            "proto-set" => m.proto_set = value.parse()?,
            "aux-per-rule" => m.aux_per_rule = int(value)?,
            "lr" => t.lr = num(value)?,
            "lr-rules" => t.lr_rules = num(value)?,
            "gumbel-noise" => t.gumbel_noise = num(value)?,
            "gumbel-noise-decay-mode" => {
                t.gumbel_decay = match value {
                    "linear" => GumbelDecay::Linear,
                    "none" | "constant" => GumbelDecay::None,
                    v => return Err(Error::InvalidConfig(format!("unknown decay mode `{v}`"))),
                }
            }
            "gumbel-variant" => {
                t.gumbel_variant = match value {
                    "standard" => GumbelVariant::Standard,
                    "rescaled" => GumbelVariant::Rescaled,
                    v => return Err(Error::InvalidConfig(format!("unknown gumbel variant `{v}`"))),
                }
            }
            "gauss-noise" => t.gauss_noise = num(value)?,
            "gauss-decay" => {
                t.gauss_decay = match value {
                    "auto" => None,
                    v => Some(num(v)?),
                }
            }
            "reg-weight" => t.reg_weight = num(value)?,
            "iterations" => t.iterations = int(value)?,
            "batch" => t.batch = int(value)?,
            "optimizer" => {
                t.optimizer = match value {
                    "adam" => OptimizerKind::Adam,
                    "sgd" => OptimizerKind::Sgd,
                    v => return Err(Error::InvalidConfig(format!("unknown optimizer `{v}`"))),
                }
            }
            "seed" => t.seed = value.parse().map_err(|_| Error::InvalidConfig(format!("bad seed `{value}`")))?,
            "train-steps" => t.train_steps = int(value)?,
            "train-num-constants" => t.train_constants = int(value)?,
            "eval-steps" => self.eval_steps = int(value)?,
            "eval-num-constants" => self.eval_constants = int(value)?,
            other => return Err(Error::InvalidConfig(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.train.validate()?;
        if self.eval_steps == 0 {
            return Err(Error::InvalidConfig("eval-steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Applies the settings in `text` on top of `base`.
pub fn parse_config(text: &str, base: ConfigFile) -> Result<ConfigFile> {
    let mut cfg = base;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
            line: i + 1,
            message: format!("expected `key = value`, found `{line}`"),
        })?;
        let key = key.trim().to_ascii_lowercase().replace('_', "-");
        cfg.set(&key, value.trim()).map_err(|e| Error::Config {
            line: i + 1,
            message: e.to_string(),
        })?;
    }
    cfg.validate().map_err(|e| Error::Config {
        line: 0,
        message: e.to_string(),
    })?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::{AndOp, OrOp, Similarity};
    use crate::model::Recursivity;

    #[test]
    fn table_keys_parse() {
        let text = "# generic\nrecursivity = iso\nfuzzy-and = product\nfuzzy-or = prodminus\n\
                    similarity = l2\nlr = 0.02\nlr-rules = 0.05\ntemperature = 0.2\n\
                    gumbel-noise = 0.5\ngumbel-noise-decay-mode = linear\nmax-depth = 3\n\
                    train-steps = 5\neval-steps = 6\ntrain-num-constants = 7\neval-num-constants = 9\n";
        let c = parse_config(text, ConfigFile::for_task(TaskName::Son)).unwrap();
        assert_eq!(c.model.recursivity, Recursivity::Iso);
        assert_eq!(c.model.operators.and_op, AndOp::Product);
        assert_eq!(c.model.operators.or_op, OrOp::ProdMinus);
        assert_eq!(c.model.operators.similarity, Similarity::L2);
        assert_eq!((c.train.lr, c.train.lr_rules), (0.02, 0.05));
        assert_eq!(c.model.temperature, 0.2);
        assert_eq!(c.train.gumbel_noise, 0.5);
        assert_eq!(c.model.max_depth, 3);
        assert_eq!((c.train.train_steps, c.eval_steps), (5, 6));
        assert_eq!((c.train.train_constants, c.eval_constants), (7, 9));
    }

    #[test]
    fn extra_keys_parse() {
        let c = parse_config("batch = 3\ninit-std = 0.5\n", ConfigFile::for_task(TaskName::Son)).unwrap();
        assert_eq!(c.train.batch, 3);
        assert_eq!(c.model.init_std, Some(0.5));
        assert!(parse_config("batch = 0\n", ConfigFile::for_task(TaskName::Son)).is_err());
        assert!(parse_config("init-std = -1\n", ConfigFile::for_task(TaskName::Son)).is_err());
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = parse_config("lr = 0.1\n\nbogus = 3\n", ConfigFile::for_task(TaskName::Son)).unwrap_err();
        assert!(matches!(e, Error::Config { line: 3, .. }), "{e}");
        let e = parse_config("lr 0.1\n", ConfigFile::for_task(TaskName::Son)).unwrap_err();
        assert!(matches!(e, Error::Config { line: 1, .. }));
        let e = parse_config("temperature = -1\n", ConfigFile::for_task(TaskName::Son)).unwrap_err();
        assert!(matches!(e, Error::Config { line: 0, .. }));
    }
}
