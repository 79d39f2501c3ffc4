//! Loss, noise schedules, optimisation and gradient verification.

mod config;
mod gradcheck;
mod optim;

use std::io::Write;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::inference::{backward, compute_scores, forward, scores_backward, BackwardOptions, Instance, SlotScores};
use crate::model::{build_model, Model, ModelConfig};
use crate::tasks::{generate_task, IlpTask, TaskName, TaskSpec};
use crate::{Error, Result, Scalar};

pub use config::{parse_config, ConfigFile};
pub use gradcheck::{check_gradients, GradCheckOptions, GradCheckReport};
pub use optim::{Adam, Optimizer, OptimizerKind, Sgd};

/// Clamp applied to target degrees before taking logarithms.
pub const BCE_EPS: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GumbelDecay {
    #[default]
    Linear,
    /// Keep `g0` throughout.
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GumbelVariant {
    /// `g * G` with `G` a standard Gumbel sample.
    #[default]
    Standard,
    /// Experimental: `(ln(-ln g) / g) * G`, zero for `g` outside `(0, 1)`.
    Rescaled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub iterations: usize,
    /// Step size for predicate embeddings.
    pub lr: f64,
    /// Step size for slot and target-slot embeddings.
    pub lr_rules: f64,
    pub reg_weight: f64,
    pub gumbel_noise: f64,
    pub gumbel_decay: GumbelDecay,
    pub gumbel_variant: GumbelVariant,
    pub gauss_noise: f64,
    /// Per-iteration factor; `None` gives `0.1^(2 / iterations)`.
    pub gauss_decay: Option<f64>,
    pub optimizer: OptimizerKind,
    /// Inference steps per training forward pass.
    pub train_steps: usize,
    pub train_constants: usize,
    /// Fresh instances averaged per update. Ignored for fixed tasks.
    pub batch: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 2000,
            lr: 0.01,
            lr_rules: 0.03,
            reg_weight: 0.01,
            gumbel_noise: 0.3,
            gumbel_decay: GumbelDecay::Linear,
            gumbel_variant: GumbelVariant::Standard,
            gauss_noise: 0.1,
            gauss_decay: None,
            optimizer: OptimizerKind::Adam,
            train_steps: 4,
            train_constants: 8,
            batch: 1,
            seed: 0,
        }
    }
}

impl TrainConfig {
    /// Defaults with the task's step count and instance size.
    pub fn for_task(name: TaskName) -> Self {
        let p = name.profile();
        Self {
            iterations: p.iterations,
            train_steps: p.train_steps,
            train_constants: p.train_constants,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.lr > 0.0 && self.lr_rules > 0.0) {
            return bad("learning rates must be positive");
        }
        if !(self.reg_weight >= 0.0) {
            return bad("reg-weight must be non-negative");
        }
        if !(self.gumbel_noise >= 0.0 && self.gauss_noise >= 0.0) {
            return bad("noise scales must be non-negative");
        }
        if let Some(d) = self.gauss_decay {
            if !(d > 0.0 && d < 1.0) {
                return bad("gauss-decay must lie in (0, 1)");
            }
        }
        if self.train_steps == 0 {
            return bad("train-steps must be at least 1");
        }
        if self.batch == 0 {
            return bad("batch must be at least 1");
        }
        Ok(())
    }

    pub fn gauss_decay(&self) -> f64 {
        self.gauss_decay
            .unwrap_or_else(|| 0.1f64.powf(2.0 / self.iterations.max(1) as f64))
    }

    /// Embedding noise standard deviation at iteration `t`.
    pub fn sigma_at(&self, t: usize) -> f64 {
        self.gauss_noise * self.gauss_decay().powi(t as i32)
    }

    /// Gumbel scale at iteration `t`; exactly zero at `t = iterations`.
    pub fn gumbel_at(&self, t: usize) -> f64 {
        gumbel_scale(self.gumbel_noise, t, self.iterations, self.gumbel_decay)
    }
}

pub fn gumbel_scale(g0: f64, t: usize, iterations: usize, decay: GumbelDecay) -> f64 {
    match decay {
        GumbelDecay::None => g0,
        GumbelDecay::Linear if iterations == 0 => 0.0,
        GumbelDecay::Linear => g0 * (1.0 - (t.min(iterations) as f64) / iterations as f64),
    }
}

/// Summed binary cross-entropy over labelled groundings and its gradient
/// with respect to the degrees.
pub fn bce_loss<S: Scalar>(values: &[S], labels: &[Option<bool>]) -> Result<(S, Vec<S>)> {
    if values.len() != labels.len() {
        return Err(Error::ShapeMismatch {
            expected: labels.len(),
            found: values.len(),
        });
    }
    let eps = S::lit(BCE_EPS);
    let one = S::one();
    let mut loss = S::zero();
    let mut grad = vec![S::zero(); values.len()];
    for ((&v, l), g) in values.iter().zip(labels).zip(grad.iter_mut()) {
        let Some(l) = l else { continue };
        let c = v.max(eps).min(one - eps);
        let inside = v > eps && v < one - eps;
        if *l {
            loss -= c.ln();
            if inside {
                *g = -one / c;
            }
        } else {
            loss -= (one - c).ln();
            if inside {
                *g = one / (one - c);
            }
        }
    }
    Ok((loss, grad))
}

/// `lambda * sum alpha (1 - alpha)` over every slot and its gradient.
pub fn interpretability_reg<S: Scalar>(scores: &SlotScores<S>, lambda: f64) -> (S, SlotScores<S>) {
    let l = S::lit(lambda);
    let two = S::lit(2.0);
    let mut total = S::zero();
    let grad = scores
        .iter()
        .map(|a| {
            a.iter()
                .map(|&x| {
                    total += x * (S::one() - x);
                    l * (S::one() - two * x)
                })
                .collect()
        })
        .collect();
    (l * total, grad)
}

/// Copy of the model with i.i.d. `N(0, sigma^2)` added to every embedding.
pub fn perturb_embeddings<S: Scalar>(model: &Model<S>, sigma: f64, rng: &mut impl RngCore) -> Model<S> {
    let mut out = model.clone();
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).expect("finite sigma");
        for v in out
            .predicate_embeddings
            .iter_mut()
            .chain(out.slot_embeddings.iter_mut())
        {
            *v += S::lit(normal.sample(rng));
        }
    }
    out
}

/// Scaled Gumbel samples, one per slot candidate.
pub fn gumbel_noise<S: Scalar>(model: &Model<S>, g: f64, variant: GumbelVariant, rng: &mut impl RngCore) -> Vec<Vec<S>> {
    let factor = match variant {
        GumbelVariant::Standard => g,
        GumbelVariant::Rescaled if g > 0.0 && g < 1.0 => (-g.ln()).ln() / g,
        GumbelVariant::Rescaled => 0.0,
    };
    (0..model.num_slots())
        .map(|s| {
            (0..model.slot_candidates(s).len())
                .map(|_| {
                    if factor == 0.0 {
                        return S::zero();
                    }
                    let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                    S::lit(-factor * (-u.ln()).ln())
                })
                .collect()
        })
        .collect()
}

/// Where training instances come from.
#[derive(Clone, Debug)]
pub enum TaskSource {
    Fixed(IlpTask),
    /// A fresh instance per iteration (one instance for arithmetic tasks).
    Generated { name: TaskName, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub iteration: usize,
    pub loss: f64,
    pub bce: f64,
    pub reg: f64,
    pub train_mse: f64,
    pub g_t: f64,
    pub sigma_t: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<S> {
    pub model: Model<S>,
    pub log: Vec<LogRow>,
    /// Noise-free MSE on the last training instance.
    pub train_mse: f64,
    pub last_task: IlpTask,
}

pub fn write_log_csv(rows: &[LogRow], out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Loss value and scores gradient for one forward/backward pass.
pub(crate) struct Evaluation<S> {
    pub bce: S,
    pub reg: S,
    pub mse: f64,
    pub d_pred: Vec<S>,
    pub d_slot: Vec<S>,
    pub near_ties: usize,
}

impl<S: Scalar> Evaluation<S> {
    /// Adds another pass over the same embeddings and noise.
    fn absorb(&mut self, other: &Self) {
        self.bce = self.bce + other.bce;
        self.mse += other.mse;
        for (a, &b) in self.d_pred.iter_mut().zip(&other.d_pred) {
            *a = *a + b;
        }
        for (a, &b) in self.d_slot.iter_mut().zip(&other.d_slot) {
            *a = *a + b;
        }
        self.near_ties += other.near_ties;
    }

    /// Turns the sums of `n` passes into means. The regularizer was added
    /// once per pass, so it needs no correction.
    fn scale(&mut self, n: usize) {
        let k = S::lit(1.0 / n as f64);
        self.bce = self.bce * k;
        self.mse /= n as f64;
        for a in self.d_pred.iter_mut().chain(self.d_slot.iter_mut()) {
            *a = *a * k;
        }
    }
}

pub(crate) fn evaluate<S: Scalar>(
    model: &Model<S>,
    instance: &Instance<S>,
    steps: usize,
    noise: Option<&[Vec<S>]>,
    lambda: f64,
    tie_tolerance: Option<f64>,
) -> Result<Evaluation<S>> {
    let scores = compute_scores(model, noise)?;
    let trace = forward(model, &scores, instance, steps, true);
    let target = &trace.last().target;
    let (bce, d_target) = bce_loss(target, &instance.labels)?;
    let (reg, d_reg) = interpretability_reg(&scores, lambda);
    let options = BackwardOptions {
        track_ties: tie_tolerance.is_some(),
        tie_tolerance: tie_tolerance.unwrap_or(1e-6),
    };
    let mut grads = backward(model, &scores, &trace, &d_target, options);
    for (da, dr) in grads.d_alpha.iter_mut().zip(&d_reg) {
        for (a, &r) in da.iter_mut().zip(dr) {
            *a += r;
        }
    }
    let mut d_pred = vec![S::zero(); model.predicate_embeddings.len()];
    let mut d_slot = vec![S::zero(); model.slot_embeddings.len()];
    scores_backward(model, &scores, &grads.d_alpha, &mut d_pred, &mut d_slot);
    Ok(Evaluation {
        bce,
        reg,
        mse: instance.mse(target),
        d_pred,
        d_slot,
        near_ties: grads.ties.near_ties,
    })
}

fn diagnostic<S: Scalar>(model: &Model<S>, instance: &Instance<S>, steps: usize) -> String {
    match compute_scores(model, None) {
        Err(e) => format!("scores unavailable: {e}"),
        Ok(scores) => {
            let (lo, hi) = scores
                .iter()
                .flatten()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v.as_f64()), h.max(v.as_f64())));
            let trace = forward(model, &scores, instance, steps, false);
            let (vlo, vhi) = trace.last().range();
            format!("alpha in [{lo}, {hi}], valuations in [{vlo}, {vhi}]")
        }
    }
}

/// Builds a model from `model_config` and trains it.
pub fn train<S: Scalar>(source: &TaskSource, model_config: &ModelConfig, config: &TrainConfig) -> Result<TrainOutcome<S>> {
    let first = instance_task(source, config, &mut task_rng(config))?;
    let model = build_model(model_config, &first.predicates, &first.target, config.seed)?;
    train_from(model, source, config)
}

fn task_rng(config: &TrainConfig) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(2);
    rng
}

fn instance_task(source: &TaskSource, config: &TrainConfig, rng: &mut ChaCha8Rng) -> Result<IlpTask> {
    match source {
        TaskSource::Fixed(t) => Ok(t.clone()),
        TaskSource::Generated { name, seed } => {
            let s = if name.is_deterministic() { *seed } else { seed ^ rng.next_u64() };
            generate_task(&TaskSpec::new(*name, config.train_constants, s))
        }
    }
}

/// Trains an existing model in place of a fresh one.
pub fn train_from<S: Scalar>(mut model: Model<S>, source: &TaskSource, config: &TrainConfig) -> Result<TrainOutcome<S>> {
    config.validate()?;
    let mut tasks = task_rng(config);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(config.seed);
    noise_rng.set_stream(1);
    let fixed = match source {
        TaskSource::Fixed(_) => true,
        TaskSource::Generated { name, .. } => name.is_deterministic(),
    };
    let mut task = instance_task(source, config, &mut tasks)?;
    let mut instance = Instance::new(&task, model.inputs())?;
    let extra = if fixed { 0 } else { config.batch - 1 };
    let mut pred_opt = Optimizer::new(config.optimizer, config.lr, model.predicate_embeddings.len());
    let mut slot_opt = Optimizer::new(config.optimizer, config.lr_rules, model.slot_embeddings.len());
    let mut log = Vec::with_capacity(config.iterations);
    for t in 0..config.iterations {
        if t > 0 && !fixed {
            task = instance_task(source, config, &mut tasks)?;
            instance = Instance::new(&task, model.inputs())?;
        }
        let sigma = config.sigma_at(t);
        let g = config.gumbel_at(t);
        let noisy = perturb_embeddings(&model, sigma, &mut noise_rng);
        let noise = gumbel_noise(&noisy, g, config.gumbel_variant, &mut noise_rng);
        let mut eval = evaluate(&noisy, &instance, config.train_steps, Some(&noise), config.reg_weight, None)?;
        if extra > 0 {
            for _ in 0..extra {
                let other = Instance::new(&instance_task(source, config, &mut tasks)?, model.inputs())?;
                let e = evaluate(&noisy, &other, config.train_steps, Some(&noise), config.reg_weight, None)?;
                eval.absorb(&e);
            }
            eval.scale(config.batch);
        }
        let loss = eval.bce + eval.reg;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss {
                iteration: t,
                diagnostic: diagnostic(&noisy, &instance, config.train_steps),
            });
        }
        pred_opt.step(&mut model.predicate_embeddings, &eval.d_pred);
        slot_opt.step(&mut model.slot_embeddings, &eval.d_slot);
        log.push(LogRow {
            iteration: t,
            loss: loss.as_f64(),
            bce: eval.bce.as_f64(),
            reg: eval.reg.as_f64(),
            train_mse: eval.mse,
            g_t: g,
            sigma_t: sigma,
        });
    }
    let scores = compute_scores(&model, None)?;
    let final_state = forward(&model, &scores, &instance, config.train_steps, false);
    let train_mse = instance.mse(&final_state.last().target);
    Ok(TrainOutcome {
        model,
        log,
        train_mse,
        last_task: task,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bce_examples() {
        let (l, _) = bce_loss(&[0.5f64], &[Some(true)]).unwrap();
        assert!((l - std::f64::consts::LN_2).abs() < 1e-12);
        let (l, _) = bce_loss(&[0.9f64, 0.1], &[Some(true), Some(false)]).unwrap();
        assert!((l - 2.0 * -(0.9f64.ln())).abs() < 1e-12);
        assert!((l - 0.2107).abs() < 1e-4);
        let (l, g) = bce_loss(&[1.0f64, 0.0], &[Some(true), Some(false)]).unwrap();
        assert!(l >= 0.0 && l < 1e-6);
        assert_eq!(g, vec![0.0, 0.0]);
        assert!(bce_loss(&[0.5f64], &[]).is_err());
    }

    #[test]
    fn reg_examples() {
        let (r, _) = interpretability_reg(&vec![vec![0.5f64, 0.5]], 0.1);
        assert!((r - 0.05).abs() < 1e-15);
        let (r, _) = interpretability_reg(&vec![vec![0.7f64, 0.2, 0.1]], 1.0);
        assert!((r - 0.46).abs() < 1e-12);
        let (r, _) = interpretability_reg(&vec![vec![1.0f64, 0.0], vec![0.0, 0.0, 1.0]], 0.3);
        assert_eq!(r, 0.0);
    }

    #[test]
    fn schedules() {
        let cfg = TrainConfig {
            gauss_decay: Some(0.999),
            ..TrainConfig::default()
        };
        assert!((cfg.sigma_at(2000) - 0.1 * 0.999f64.powi(2000)).abs() < 1e-15);
        assert!((cfg.sigma_at(2000) - 0.0135).abs() < 1e-4);
        let d = TrainConfig::default();
        assert!((d.sigma_at(1000) - 0.01).abs() < 1e-12);
        assert_eq!(d.gumbel_at(2000), 0.0);
        assert!((d.gumbel_at(0) - 0.3).abs() < 1e-15);
        assert!((d.gumbel_at(1000) - 0.15).abs() < 1e-15);
    }

    #[test]
    fn batch_is_ignored_for_fixed_tasks() {
        let name = TaskName::Predecessor;
        let source = TaskSource::Generated { name, seed: 0 };
        let model_cfg = ModelConfig { max_depth: 2, ..ModelConfig::default() };
        let base = TrainConfig { iterations: 5, ..TrainConfig::for_task(name) };
        let a = train::<f64>(&source, &model_cfg, &base).unwrap();
        let b = train::<f64>(&source, &model_cfg, &TrainConfig { batch: 3, ..base }).unwrap();
        assert_eq!(a.model.slot_embeddings, b.model.slot_embeddings);
    }

    #[test]
    fn batch_averages_fresh_instances() {
        let name = TaskName::Grandparent;
        let source = TaskSource::Generated { name, seed: 0 };
        let model_cfg = ModelConfig { max_depth: 2, ..ModelConfig::default() };
        let base = TrainConfig { iterations: 3, train_constants: 5, ..TrainConfig::for_task(name) };
        let a = train::<f64>(&source, &model_cfg, &base).unwrap();
        let b = train::<f64>(&source, &model_cfg, &TrainConfig { batch: 2, ..base }).unwrap();
        assert_eq!(b.log.len(), 3);
        assert!(b.log.iter().all(|r| r.loss.is_finite() && r.train_mse <= 1.0));
        assert_ne!(a.model.slot_embeddings, b.model.slot_embeddings);
    }
}
