//! Central finite-difference verification of the analytic gradient.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use super::{bce_loss, evaluate, interpretability_reg};
use crate::inference::{compute_scores, forward, Instance};
use crate::logic::{FALSE, TRUE};
use crate::model::Model;
use crate::{Result, Scalar};

#[derive(Clone, Debug)]
pub struct GradCheckOptions {
    pub h: f64,
    /// Maximum accepted relative error.
    pub tolerance: f64,
    /// Denominator floor of the relative error, so coordinates with a
    /// vanishing gradient are compared absolutely.
    pub floor: f64,
    pub coordinates: usize,
    pub steps: usize,
    pub reg_weight: f64,
    /// Operand gap under which a min/max decision counts as tied.
    pub tie_tolerance: f64,
    /// Points drawn before giving up on a tie-free one.
    pub max_attempts: usize,
    /// Replace every non-builtin input degree by a uniform draw in
    /// `(0.05, 0.95)`.
    pub randomize_inputs: bool,
    pub seed: u64,
}

impl Default for GradCheckOptions {
    fn default() -> Self {
        Self {
            h: 1e-5,
            tolerance: 1e-4,
            floor: 1e-3,
            coordinates: 40,
            steps: 2,
            reg_weight: 0.1,
            tie_tolerance: 1e-6,
            max_attempts: 20,
            randomize_inputs: true,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CoordinateCheck {
    /// `p<index>` for predicate tables, `s<index>` for slot tables.
    pub coordinate: String,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GradCheckReport {
    pub checks: Vec<CoordinateCheck>,
    pub max_rel_error: f64,
    pub attempts: usize,
    /// No tie-free point was found.
    pub inconclusive: bool,
    pub passed: bool,
}

fn loss_only<S: Scalar>(model: &Model<S>, instance: &Instance<S>, steps: usize, lambda: f64) -> Result<f64> {
    let scores = compute_scores(model, None)?;
    let trace = forward(model, &scores, instance, steps, false);
    let (bce, _) = bce_loss(&trace.last().target, &instance.labels)?;
    let (reg, _) = interpretability_reg(&scores, lambda);
    Ok((bce + reg).as_f64())
}

/// Compares the analytic gradient of `BCE + reg` (noise free) with central
/// differences on randomly chosen embedding coordinates.
pub fn check_gradients<S: Scalar>(
    model: &Model<S>,
    instance: &Instance<S>,
    options: &GradCheckOptions,
) -> Result<GradCheckReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let jitter = Normal::new(0.0, 0.05).expect("finite");
    let mut point = model.clone();
    let mut inst = instance.clone();
    for attempt in 1..=options.max_attempts {
        if options.randomize_inputs {
            for (p, t) in model.inputs().iter().zip(inst.inputs.iter_mut()) {
                if p.name == TRUE || p.name == FALSE {
                    continue;
                }
                for v in t.iter_mut() {
                    *v = S::lit(rng.gen_range(0.05..0.95));
                }
            }
        }
        if attempt > 1 {
            for v in point
                .predicate_embeddings
                .iter_mut()
                .chain(point.slot_embeddings.iter_mut())
            {
                *v += S::lit(jitter.sample(&mut rng));
            }
        }
        let eval = evaluate_with_tolerance(&point, &inst, options)?;
        if eval.near_ties > 0 {
            continue;
        }
        let np = point.predicate_embeddings.len();
        let total = point.num_parameters();
        let picks = sample(&mut rng, total, options.coordinates.min(total));
        let mut checks = Vec::new();
        for idx in picks.iter() {
            let (analytic, coordinate) = if idx < np {
                (eval.d_pred[idx].as_f64(), format!("p{idx}"))
            } else {
                (eval.d_slot[idx - np].as_f64(), format!("s{}", idx - np))
            };
            let mut probe = point.clone();
            let numeric = {
                let mut f = |delta: f64| -> Result<f64> {
                    let slot = if idx < np {
                        &mut probe.predicate_embeddings[idx]
                    } else {
                        &mut probe.slot_embeddings[idx - np]
                    };
                    let base = if idx < np {
                        point.predicate_embeddings[idx]
                    } else {
                        point.slot_embeddings[idx - np]
                    };
                    *slot = base + S::lit(delta);
                    loss_only(&probe, &inst, options.steps, options.reg_weight)
                };
                (f(options.h)? - f(-options.h)?) / (2.0 * options.h)
            };
            let denom = analytic.abs().max(numeric.abs()).max(options.floor);
            checks.push(CoordinateCheck {
                coordinate,
                analytic,
                numeric,
                rel_error: (analytic - numeric).abs() / denom,
            });
        }
        let max_rel_error = checks.iter().map(|c| c.rel_error).fold(0.0, f64::max);
        return Ok(GradCheckReport {
            passed: max_rel_error <= options.tolerance,
            checks,
            max_rel_error,
            attempts: attempt,
            inconclusive: false,
        });
    }
    Ok(GradCheckReport {
        checks: Vec::new(),
        max_rel_error: f64::NAN,
        attempts: options.max_attempts,
        inconclusive: true,
        passed: false,
    })
}

fn evaluate_with_tolerance<S: Scalar>(
    model: &Model<S>,
    instance: &Instance<S>,
    options: &GradCheckOptions,
) -> Result<super::Evaluation<S>> {
    evaluate(model, instance, options.steps, None, options.reg_weight, Some(options.tie_tolerance))
}
