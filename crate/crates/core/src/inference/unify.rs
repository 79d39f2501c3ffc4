//! Soft unification: softmax over slot/predicate similarities.

use super::Similarity;
use crate::model::Model;
use crate::{Error, Result, Scalar};

/// One probability vector per rule slot, aligned with the slot's candidate
/// list; the target slot is last.
pub type SlotScores<S> = Vec<Vec<S>>;

fn dot<S: Scalar>(a: &[S], b: &[S]) -> S {
    a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + x * y)
}

fn norm<S: Scalar>(a: &[S]) -> S {
    dot(a, a).sqrt()
}

pub fn similarity<S: Scalar>(sim: Similarity, a: &[S], b: &[S]) -> Result<S> {
    Ok(match sim {
        Similarity::Cosine => {
            let (na, nb) = (norm(a), norm(b));
            if na.is_zero() || nb.is_zero() {
                return Err(Error::ZeroNorm(format!("norms {na} and {nb}")));
            }
            dot(a, b) / (na * nb)
        }
        Similarity::L1 => -a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + (x - y).abs()),
        Similarity::L2 => -a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y)).sqrt(),
        Similarity::ScalarProduct => dot(a, b),
    })
}

/// Accumulates `w * d sim / d a` into `da` and `w * d sim / d b` into `db`.
fn similarity_backward<S: Scalar>(sim: Similarity, a: &[S], b: &[S], w: S, da: &mut [S], db: &mut [S]) {
    match sim {
        Similarity::Cosine => {
            let (na, nb) = (norm(a), norm(b));
            let c = dot(a, b) / (na * nb);
            let inv = S::one() / (na * nb);
            let (ka, kb) = (c / (na * na), c / (nb * nb));
            for i in 0..a.len() {
                da[i] += w * (b[i] * inv - ka * a[i]);
                db[i] += w * (a[i] * inv - kb * b[i]);
            }
        }
        Similarity::L1 => {
            for i in 0..a.len() {
                let d = a[i] - b[i];
                let s = if d > S::zero() {
                    S::one()
                } else if d < S::zero() {
                    -S::one()
                } else {
                    S::zero()
                };
                da[i] -= w * s;
                db[i] += w * s;
            }
        }
        Similarity::L2 => {
            let dist = a.iter().zip(b).fold(S::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y)).sqrt();
            if dist.is_zero() {
                return;
            }
            for i in 0..a.len() {
                let g = (a[i] - b[i]) / dist;
                da[i] -= w * g;
                db[i] += w * g;
            }
        }
        Similarity::ScalarProduct => {
            for i in 0..a.len() {
                da[i] += w * b[i];
                db[i] += w * a[i];
            }
        }
    }
}

fn softmax_in_place<S: Scalar>(v: &mut [S]) {
    let m = v.iter().fold(S::neg_infinity(), |m, &x| m.max(x));
    let mut total = S::zero();
    for x in v.iter_mut() {
        *x = (*x - m).exp();
        total += *x;
    }
    for x in v.iter_mut() {
        *x /= total;
    }
}

/// `softmax((sim(slot, c) + noise_c) / tau)` over candidates. `noise` holds
/// already scaled Gumbel samples, one per candidate.
pub fn unification_scores<S: Scalar>(
    slot: &[S],
    candidates: &[&[S]],
    tau: f64,
    sim: Similarity,
    noise: Option<&[S]>,
) -> Result<Vec<S>> {
    let t = S::lit(tau);
    let mut out = candidates
        .iter()
        .map(|c| similarity(sim, slot, c))
        .collect::<Result<Vec<S>>>()?;
    if let Some(noise) = noise {
        for (o, &g) in out.iter_mut().zip(noise) {
            *o += g;
        }
    }
    for o in out.iter_mut() {
        *o /= t;
    }
    softmax_in_place(&mut out);
    Ok(out)
}

/// Scores for every slot of the model. `noise[slot]` is per-candidate.
pub fn compute_scores<S: Scalar>(model: &Model<S>, noise: Option<&[Vec<S>]>) -> Result<SlotScores<S>> {
    let ops = model.config.operators;
    (0..model.num_slots())
        .map(|s| {
            let cands: Vec<&[S]> = model
                .slot_candidates(s)
                .iter()
                .map(|&p| model.predicate_embedding(p))
                .collect();
            unification_scores(
                model.slot_embedding(s),
                &cands,
                model.config.temperature,
                ops.similarity,
                noise.map(|n| n[s].as_slice()),
            )
        })
        .collect()
}

/// Back-propagates `d_alpha` (gradient of the loss with respect to the
/// scores) to the embedding tables, accumulating into `d_pred` and `d_slot`.
pub fn scores_backward<S: Scalar>(
    model: &Model<S>,
    scores: &SlotScores<S>,
    d_alpha: &SlotScores<S>,
    d_pred: &mut [S],
    d_slot: &mut [S],
) {
    let d = model.dim;
    let inv_t = S::one() / S::lit(model.config.temperature);
    let sim = model.config.operators.similarity;
    for s in 0..model.num_slots() {
        let alpha = &scores[s];
        let da = &d_alpha[s];
        if da.iter().all(|v| v.is_zero()) {
            continue;
        }
        let mean = alpha.iter().zip(da).fold(S::zero(), |acc, (&a, &g)| acc + a * g);
        let slot = model.slot_embedding(s);
        let dslot = &mut d_slot[s * d..(s + 1) * d];
        for (i, &p) in model.slot_candidates(s).iter().enumerate() {
            let w = alpha[i] * (da[i] - mean) * inv_t;
            if w.is_zero() {
                continue;
            }
            let dp = &mut d_pred[p * d..(p + 1) * d];
            similarity_backward(sim, slot, model.predicate_embedding(p), w, dslot, dp);
        }
    }
}
