//! Traced forward pass and its hand-written reverse pass.
//!
//! Within one step layers are updated in ascending order. Auxiliaries of the
//! layer being updated read their own layer (and themselves) from the
//! previous step, lower layers from the current one. The reverse pass walks
//! steps backwards and, inside a step, the target first and then layers from
//! the top down, so every gradient is complete before it is propagated.

use super::unify::SlotScores;
use super::{project_into, AndOp, Instance, OrOp, Pool, ValuationState};
use crate::model::{AuxPredicate, Model, RuleShape};
use crate::Scalar;

const NONE: u32 = u32::MAX;

/// Intermediate tensors of one auxiliary update.
#[derive(Clone, Debug)]
pub(crate) struct AuxRecord<S> {
    and: Vec<S>,
    dis: Vec<S>,
    or: Vec<S>,
    /// Winning pair (max pooling only).
    and_arg: Vec<u32>,
    /// Winning disjunct candidate (max pooling only).
    dis_arg: Vec<u32>,
    pub(crate) v_new: Vec<S>,
    ops: u64,
}

#[derive(Clone, Debug)]
struct TargetRecord<S> {
    pooled: Vec<S>,
    arg: Vec<u32>,
}

/// States after every step plus what the reverse pass needs.
#[derive(Clone, Debug)]
pub struct Trace<S> {
    /// `states[k]` is the state after `k` steps; `states[0]` is initial.
    pub states: Vec<ValuationState<S>>,
    /// Number of fuzzy-AND evaluations performed.
    pub op_count: u64,
    records: Vec<Vec<AuxRecord<S>>>,
    target_records: Vec<TargetRecord<S>>,
}

impl<S: Scalar> Trace<S> {
    pub fn last(&self) -> &ValuationState<S> {
        self.states.last().expect("initial state")
    }
}

#[inline(always)]
fn and_val<S: Scalar>(op: AndOp, a: S, b: S) -> S {
    match op {
        AndOp::Min => a.min(b),
        AndOp::Product => a * b,
    }
}

fn cells(n: usize, arity: usize) -> usize {
    n.pow(arity as u32)
}

/// Conjunction term for one candidate pair, into `t`.
fn conj_forward<S: Scalar>(shape: RuleShape, op: AndOp, a: &[S], b: &[S], n: usize, t: &mut [S]) -> u64 {
    match shape {
        RuleShape::B => {
            t.fill(S::zero());
            for x in 0..n {
                let row = &mut t[x * n..(x + 1) * n];
                for z in 0..n {
                    let az = a[x * n + z];
                    if az.is_zero() {
                        continue;
                    }
                    let brow = &b[z * n..(z + 1) * n];
                    match op {
                        AndOp::Min => {
                            for (r, &bz) in row.iter_mut().zip(brow) {
                                let v = if az < bz { az } else { bz };
                                if v > *r {
                                    *r = v;
                                }
                            }
                        }
                        AndOp::Product => {
                            for (r, &bz) in row.iter_mut().zip(brow) {
                                let v = az * bz;
                                if v > *r {
                                    *r = v;
                                }
                            }
                        }
                    }
                }
            }
            (n * n * n) as u64
        }
        RuleShape::C => {
            for x in 0..n {
                for y in 0..n {
                    t[x * n + y] = and_val(op, a[x * n + y], b[y * n + x]);
                }
            }
            (n * n) as u64
        }
        RuleShape::A => {
            for x in 0..n {
                let mut best = S::zero();
                for y in 0..n {
                    let v = and_val(op, a[x * n + y], b[y * n + x]);
                    if v > best {
                        best = v;
                    }
                }
                t[x] = best;
            }
            (n * n) as u64
        }
        RuleShape::I => unreachable!("the permutation rule has no conjunction"),
    }
}

/// Single-slot view of a projected candidate.
fn single_view<S: Scalar>(shape: RuleShape, m: &[S], n: usize, out: &mut [S]) {
    match shape {
        RuleShape::A => {
            for x in 0..n {
                out[x] = m[x * n..(x + 1) * n].iter().fold(S::zero(), |acc, &v| acc.max(v));
            }
        }
        RuleShape::B | RuleShape::C => out.copy_from_slice(m),
        RuleShape::I => {
            for x in 0..n {
                for y in 0..n {
                    out[x * n + y] = m[y * n + x];
                }
            }
        }
    }
}

/// Pools `w * t` into `acc` (sum) or keeps the running maximum with its
/// argument (max).
#[inline]
fn pool_into<S: Scalar>(pool: Pool, acc: &mut [S], arg: &mut [u32], w: S, t: &[S], idx: u32) {
    match pool {
        Pool::Sum => {
            for (a, &v) in acc.iter_mut().zip(t) {
                *a += w * v;
            }
        }
        Pool::Max => {
            for ((a, g), &v) in acc.iter_mut().zip(arg.iter_mut()).zip(t) {
                let c = w * v;
                if *g == NONE || c > *a {
                    *a = c;
                    *g = idx;
                }
            }
        }
    }
}

fn or_val<S: Scalar>(op: OrOp, a: S, b: S) -> S {
    match op {
        OrOp::Max => a.max(b),
        OrOp::ProdMinus => a + b - a * b,
    }
}

fn projections<'a, S: Scalar>(model: &Model<S>, cands: &[usize], read: impl Fn(usize) -> &'a [S], n: usize) -> Vec<Vec<S>> {
    cands
        .iter()
        .map(|&c| {
            let mut m = vec![S::zero(); n * n];
            project_into(read(c), model.predicates[c].arity(), n, &mut m);
            m
        })
        .collect()
}

/// One auxiliary update reading all candidates from `src`.
pub(crate) fn aux_forward<S: Scalar>(
    model: &Model<S>,
    aux_idx: usize,
    src: &[Vec<S>],
    scores: &SlotScores<S>,
    is_zero: impl Fn(usize) -> bool,
) -> AuxRecord<S> {
    let aux = &model.aux[aux_idx];
    let n = infer_n(model, src);
    aux_forward_split(model, aux, n, |c| &src[c], scores, is_zero)
}

fn aux_forward_split<'a, S: Scalar>(
    model: &Model<S>,
    aux: &AuxPredicate,
    n: usize,
    read: impl Fn(usize) -> &'a [S],
    scores: &SlotScores<S>,
    is_zero: impl Fn(usize) -> bool,
) -> AuxRecord<S> {
    let ops = model.config.operators;
    let rule = aux.rule;
    let h = rule.head_arity();
    let size = cells(n, h);
    let proj = projections(model, &aux.candidates, &read, n);
    let live: Vec<bool> = aux.candidates.iter().map(|&c| !is_zero(c)).collect();
    let mut count = 0u64;
    let slot0 = aux.first_slot;

    let mut and = Vec::new();
    let mut and_arg = Vec::new();
    if rule.has_conjunction() {
        and = vec![S::zero(); size];
        if ops.pool == Pool::Max {
            and_arg = vec![NONE; size];
        }
        let (a1, a2) = (&scores[slot0], &scores[slot0 + 1]);
        let k = aux.candidates.len();
        let mut t = vec![S::zero(); size];
        for i in 0..k {
            if !live[i] {
                continue;
            }
            for j in 0..k {
                if !live[j] {
                    continue;
                }
                count += conj_forward(rule.shape, ops.and_op, &proj[i], &proj[j], n, &mut t);
                pool_into(ops.pool, &mut and, &mut and_arg, a1[i] * a2[j], &t, (i * k + j) as u32);
            }
        }
        finish_max(&mut and, &and_arg);
    }
    let mut dis = Vec::new();
    let mut dis_arg = Vec::new();
    if let Some(s) = rule.single_slot() {
        dis = vec![S::zero(); size];
        if ops.pool == Pool::Max {
            dis_arg = vec![NONE; size];
        }
        let a3 = &scores[slot0 + s];
        let mut view = vec![S::zero(); size];
        for (i, m) in proj.iter().enumerate() {
            if !live[i] {
                continue;
            }
            single_view(rule.shape, m, n, &mut view);
            count += (n * n) as u64;
            pool_into(ops.pool, &mut dis, &mut dis_arg, a3[i], &view, i as u32);
        }
        finish_max(&mut dis, &dis_arg);
    }
    let or: Vec<S> = match (rule.has_conjunction(), rule.single_slot().is_some()) {
        (true, true) => and.iter().zip(&dis).map(|(&a, &b)| or_val(ops.or_op, a, b)).collect(),
        (true, false) => and.clone(),
        _ => dis.clone(),
    };
    let old = read(aux.predicate);
    let v_new = old.iter().zip(&or).map(|(&o, &v)| o.max(v)).collect();
    AuxRecord {
        and,
        dis,
        or,
        and_arg,
        dis_arg,
        v_new,
        ops: count,
    }
}

/// Domain size recovered from the first auxiliary tensor.
fn infer_n<S: Scalar>(model: &Model<S>, src: &[Vec<S>]) -> usize {
    let aux = &model.aux[0];
    let len = src[aux.predicate].len();
    match aux.rule.head_arity() {
        1 => len,
        _ => (len as f64).sqrt().round() as usize,
    }
}

fn finish_max<S: Scalar>(acc: &mut [S], arg: &[u32]) {
    if arg.is_empty() {
        return;
    }
    for (a, &g) in acc.iter_mut().zip(arg) {
        if g == NONE {
            *a = S::zero();
        }
    }
}

pub(crate) fn target_forward<S: Scalar>(
    model: &Model<S>,
    src: &[Vec<S>],
    old: &[S],
    scores: &SlotScores<S>,
) -> (Vec<S>, Vec<S>, Vec<u32>) {
    let pool = model.config.operators.pool;
    let alpha = &scores[model.target_slot()];
    let size = old.len();
    let mut pooled = vec![S::zero(); size];
    let mut arg = if pool == Pool::Max { vec![NONE; size] } else { Vec::new() };
    for (i, &q) in model.target_candidates.iter().enumerate() {
        pool_into(pool, &mut pooled, &mut arg, alpha[i], &src[q], i as u32);
    }
    finish_max(&mut pooled, &arg);
    let v = old.iter().zip(&pooled).map(|(&o, &p)| o.max(p)).collect();
    (v, pooled, arg)
}

/// Runs `steps` inference passes. With `keep_records` the trace supports
/// [`backward`]; otherwise only the states are kept.
pub fn forward<S: Scalar>(
    model: &Model<S>,
    scores: &SlotScores<S>,
    instance: &Instance<S>,
    steps: usize,
    keep_records: bool,
) -> Trace<S> {
    let init = ValuationState::initial(model, instance);
    let input_zero: Vec<bool> = init.values[..model.num_inputs]
        .iter()
        .map(|v| v.iter().all(|x| x.is_zero()))
        .collect();
    let mut trace = Trace {
        states: vec![init],
        op_count: 0,
        records: Vec::new(),
        target_records: Vec::new(),
    };
    for k in 1..=steps {
        let prev = trace.states.last().expect("initial state");
        let mut cur = prev.values.clone();
        let mut recs: Vec<Option<AuxRecord<S>>> = vec![None; model.aux.len()];
        for layer in 1..=model.config.max_depth {
            let mut updates = Vec::new();
            for (ai, aux) in model.aux.iter().enumerate().filter(|(_, a)| a.layer == layer) {
                let is_zero = |c: usize| {
                    if c < model.num_inputs {
                        input_zero[c]
                    } else {
                        k == 1 && model.layer_of(c) >= layer
                    }
                };
                let rec = aux_forward_split(model, aux, prev.n, |c| &cur[c], scores, is_zero);
                trace.op_count += rec.ops;
                updates.push((ai, rec));
            }
            for (ai, rec) in updates {
                cur[model.aux[ai].predicate].clone_from(&rec.v_new);
                recs[ai] = Some(rec);
            }
        }
        let (target, pooled, arg) = target_forward(model, &cur, &prev.target, scores);
        let n = prev.n;
        trace.states.push(ValuationState { n, values: cur, target });
        if keep_records {
            trace.records.push(recs.into_iter().map(|r| r.expect("every aux updated")).collect());
            trace.target_records.push(TargetRecord { pooled, arg });
        }
    }
    trace
}

#[derive(Clone, Copy, Debug)]
pub struct BackwardOptions {
    /// Count max/min decisions whose operands differ by less than
    /// `tie_tolerance` (exactly equal operands are not counted).
    pub track_ties: bool,
    pub tie_tolerance: f64,
}

impl Default for BackwardOptions {
    fn default() -> Self {
        Self {
            track_ties: false,
            tie_tolerance: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct TieReport {
    /// Decisions with a nearly tied runner-up.
    pub near_ties: usize,
}

#[derive(Clone, Debug)]
pub struct Gradients<S> {
    /// Loss gradient with respect to every slot's scores.
    pub d_alpha: SlotScores<S>,
    pub ties: TieReport,
}

struct Ties<S> {
    on: bool,
    eps: S,
    count: usize,
}

impl<S: Scalar> Ties<S> {
    #[inline]
    fn pair(&mut self, a: S, b: S) {
        if self.on {
            let d = (a - b).abs();
            if d > S::zero() && d < self.eps {
                self.count += 1;
            }
        }
    }
}

/// Reverse pass of the conjunction term of one pair. Accumulates
/// `coef * w * dT/da` into `da` (and likewise `db`) and returns `sum(w * T)`.
#[allow(clippy::too_many_arguments)]
fn conj_backward<S: Scalar>(
    shape: RuleShape,
    op: AndOp,
    a: &[S],
    b: &[S],
    n: usize,
    w: &[S],
    coef: S,
    da: &mut [S],
    db: &mut [S],
    ties: &mut Ties<S>,
) -> S {
    let mut s = S::zero();
    let inner = if shape == RuleShape::C { 1 } else { n };
    for (cell, &wc) in w.iter().enumerate() {
        if wc.is_zero() {
            continue;
        }
        let (x, y) = match shape {
            RuleShape::A => (cell, 0),
            _ => (cell / n, cell % n),
        };
        let idx = |k: usize| -> (usize, usize) {
            match shape {
                RuleShape::B => (x * n + k, k * n + y),
                RuleShape::A => (x * n + k, k * n + x),
                _ => (x * n + y, y * n + x),
            }
        };
        let mut best = S::neg_infinity();
        let mut second = S::neg_infinity();
        let mut bk = 0;
        for k in 0..inner {
            let (ia, ib) = idx(k);
            let v = and_val(op, a[ia], b[ib]);
            if v > best {
                second = best;
                best = v;
                bk = k;
            } else if v < best && v > second {
                second = v;
            }
        }
        if second > S::neg_infinity() {
            ties.pair(best, second);
        }
        s += wc * best;
        let (ia, ib) = idx(bk);
        let g = coef * wc;
        match op {
            AndOp::Min => {
                ties.pair(a[ia], b[ib]);
                if a[ia] <= b[ib] {
                    da[ia] += g;
                } else {
                    db[ib] += g;
                }
            }
            AndOp::Product => {
                da[ia] += g * b[ib];
                db[ib] += g * a[ia];
            }
        }
    }
    s
}

/// Reverse pass of a single-slot view. Returns `sum(w * view)`.
fn single_backward<S: Scalar>(shape: RuleShape, m: &[S], n: usize, w: &[S], coef: S, dm: &mut [S], ties: &mut Ties<S>) -> S {
    let mut s = S::zero();
    for (cell, &wc) in w.iter().enumerate() {
        if wc.is_zero() {
            continue;
        }
        let src = match shape {
            RuleShape::A => {
                let row = &m[cell * n..(cell + 1) * n];
                let mut bk = 0;
                let mut second = S::neg_infinity();
                for (k, &v) in row.iter().enumerate().skip(1) {
                    if v > row[bk] {
                        second = row[bk];
                        bk = k;
                    } else if v < row[bk] && v > second {
                        second = v;
                    }
                }
                if second > S::neg_infinity() {
                    ties.pair(row[bk], second);
                }
                cell * n + bk
            }
            RuleShape::B | RuleShape::C => cell,
            RuleShape::I => (cell % n) * n + cell / n,
        };
        s += wc * m[src];
        dm[src] += coef * wc;
    }
    s
}

/// Adds the gradient on a projected `n x n` matrix back onto a tensor of
/// the candidate's own arity.
fn unproject<S: Scalar>(dm: &[S], arity: usize, n: usize, out: &mut [S]) {
    match arity {
        2 => {
            for (o, &d) in out.iter_mut().zip(dm) {
                *o += d;
            }
        }
        1 => {
            for x in 0..n {
                out[x] += dm[x * n..(x + 1) * n].iter().copied().sum::<S>();
            }
        }
        _ => out[0] += dm.iter().copied().sum::<S>(),
    }
}

/// Reverse pass through a recorded trace. `d_target` is the loss gradient
/// with respect to the final target valuation.
pub fn backward<S: Scalar>(
    model: &Model<S>,
    scores: &SlotScores<S>,
    trace: &Trace<S>,
    d_target: &[S],
    options: BackwardOptions,
) -> Gradients<S> {
    assert_eq!(
        trace.records.len() + 1,
        trace.states.len(),
        "trace was recorded without records"
    );
    let ops = model.config.operators;
    let mut ties = Ties {
        on: options.track_ties,
        eps: S::lit(options.tie_tolerance),
        count: 0,
    };
    let mut d_alpha: SlotScores<S> = scores.iter().map(|a| vec![S::zero(); a.len()]).collect();
    let steps = trace.records.len();
    let n = trace.states[0].n;
    let zeros = |st: &ValuationState<S>| -> Vec<Vec<S>> { st.values.iter().map(|v| vec![S::zero(); v.len()]).collect() };
    let input_zero: Vec<bool> = trace.states[0].values[..model.num_inputs]
        .iter()
        .map(|v| v.iter().all(|x| x.is_zero()))
        .collect();
    let mut g_cur = zeros(&trace.states[0]);
    let mut g_t: Vec<S> = d_target.to_vec();

    for k in (1..=steps).rev() {
        let now = &trace.states[k];
        let before = &trace.states[k - 1];
        let mut g_prev = zeros(before);
        let mut g_prev_t = vec![S::zero(); g_t.len()];

        // target
        let trec = &trace.target_records[k - 1];
        let ts = model.target_slot();
        let mut gp = vec![S::zero(); g_t.len()];
        for c in 0..g_t.len() {
            ties.pair(trec.pooled[c], before.target[c]);
            if trec.pooled[c] >= before.target[c] {
                gp[c] = g_t[c];
            } else {
                g_prev_t[c] = g_t[c];
            }
        }
        for (i, &q) in model.target_candidates.iter().enumerate() {
            let a = scores[ts][i];
            let vq = &now.values[q];
            for c in 0..gp.len() {
                if gp[c].is_zero() || (ops.pool == Pool::Max && trec.arg[c] != i as u32) {
                    continue;
                }
                d_alpha[ts][i] += gp[c] * vq[c];
                g_cur[q][c] += a * gp[c];
            }
        }

        for layer in (1..=model.config.max_depth).rev() {
            for (ai, aux) in model.aux.iter().enumerate().filter(|(_, a)| a.layer == layer) {
                let p = aux.predicate;
                if g_cur[p].iter().all(|v| v.is_zero()) {
                    continue;
                }
                let g = std::mem::take(&mut g_cur[p]);
                let rec = &trace.records[k - 1][ai];
                let read = |c: usize| -> &[S] {
                    if c < model.num_inputs || model.layer_of(c) < layer {
                        &now.values[c]
                    } else {
                        &before.values[c]
                    }
                };
                let is_zero = |c: usize| {
                    if c < model.num_inputs {
                        input_zero[c]
                    } else {
                        k == 1 && model.layer_of(c) >= layer
                    }
                };
                let old = &before.values[p];
                let size = g.len();
                let mut g_or = vec![S::zero(); size];
                for c in 0..size {
                    ties.pair(rec.or[c], old[c]);
                    if rec.or[c] >= old[c] {
                        g_or[c] = g[c];
                    } else {
                        g_prev[p][c] += g[c];
                    }
                }
                let rule = aux.rule;
                let (g_and, g_dis) = match (rule.has_conjunction(), rule.single_slot().is_some()) {
                    (true, true) => {
                        let mut ga = vec![S::zero(); size];
                        let mut gd = vec![S::zero(); size];
                        for c in 0..size {
                            let (a, b) = (rec.and[c], rec.dis[c]);
                            match ops.or_op {
                                OrOp::Max => {
                                    ties.pair(a, b);
                                    if a >= b {
                                        ga[c] = g_or[c];
                                    } else {
                                        gd[c] = g_or[c];
                                    }
                                }
                                OrOp::ProdMinus => {
                                    ga[c] = g_or[c] * (S::one() - b);
                                    gd[c] = g_or[c] * (S::one() - a);
                                }
                            }
                        }
                        (ga, gd)
                    }
                    (true, false) => (g_or, Vec::new()),
                    _ => (Vec::new(), g_or),
                };
                let kc = aux.candidates.len();
                let proj = projections(model, &aux.candidates, read, n);
                let live: Vec<bool> = aux.candidates.iter().map(|&c| !is_zero(c)).collect();
                let mut dproj: Vec<Vec<S>> = vec![Vec::new(); kc];
                let slot0 = aux.first_slot;
                let ensure = |dproj: &mut Vec<Vec<S>>, i: usize| {
                    if dproj[i].is_empty() {
                        dproj[i] = vec![S::zero(); n * n];
                    }
                };

                if rule.has_conjunction() && g_and.iter().any(|v| !v.is_zero()) {
                    let mut spare = vec![S::zero(); n * n];
                    let pairs: Vec<(usize, usize)> = match ops.pool {
                        Pool::Sum => (0..kc)
                            .filter(|&i| live[i])
                            .flat_map(|i| (0..kc).filter(|&j| live[j]).map(move |j| (i, j)))
                            .collect(),
                        Pool::Max => {
                            let mut seen: Vec<u32> =
                                rec.and_arg.iter().copied().filter(|&a| a != NONE).collect();
                            seen.sort_unstable();
                            seen.dedup();
                            seen.into_iter().map(|a| (a as usize / kc, a as usize % kc)).collect()
                        }
                    };
                    let mut masked = vec![S::zero(); size];
                    for (i, j) in pairs {
                        let w: &[S] = match ops.pool {
                            Pool::Sum => &g_and,
                            Pool::Max => {
                                let code = (i * kc + j) as u32;
                                for c in 0..size {
                                    masked[c] = if rec.and_arg[c] == code { g_and[c] } else { S::zero() };
                                }
                                &masked
                            }
                        };
                        let (a1, a2) = (scores[slot0][i], scores[slot0 + 1][j]);
                        ensure(&mut dproj, i);
                        ensure(&mut dproj, j);
                        let s = if i == j {
                            spare.fill(S::zero());
                            let s = conj_backward(
                                rule.shape,
                                ops.and_op,
                                &proj[i],
                                &proj[j],
                                n,
                                w,
                                a1 * a2,
                                &mut dproj[i],
                                &mut spare,
                                &mut ties,
                            );
                            for (d, &v) in dproj[i].iter_mut().zip(&spare) {
                                *d += v;
                            }
                            s
                        } else {
                            let (lo, hi) = dproj.split_at_mut(i.max(j));
                            let (di, dj) = if i < j {
                                (&mut lo[i], &mut hi[0])
                            } else {
                                (&mut hi[0], &mut lo[j])
                            };
                            conj_backward(rule.shape, ops.and_op, &proj[i], &proj[j], n, w, a1 * a2, di, dj, &mut ties)
                        };
                        d_alpha[slot0][i] += a2 * s;
                        d_alpha[slot0 + 1][j] += a1 * s;
                    }
                }

                if let Some(sl) = rule.single_slot() {
                    if g_dis.iter().any(|v| !v.is_zero()) {
                        let mut masked = vec![S::zero(); size];
                        for i in 0..kc {
                            if !live[i] {
                                continue;
                            }
                            let w: &[S] = match ops.pool {
                                Pool::Sum => &g_dis,
                                Pool::Max => {
                                    let mut any = false;
                                    for c in 0..size {
                                        masked[c] = if rec.dis_arg[c] == i as u32 {
                                            any = true;
                                            g_dis[c]
                                        } else {
                                            S::zero()
                                        };
                                    }
                                    if !any {
                                        continue;
                                    }
                                    &masked
                                }
                            };
                            ensure(&mut dproj, i);
                            let a3 = scores[slot0 + sl][i];
                            let s = single_backward(rule.shape, &proj[i], n, w, a3, &mut dproj[i], &mut ties);
                            d_alpha[slot0 + sl][i] += s;
                        }
                    }
                }

                for (i, &c) in aux.candidates.iter().enumerate() {
                    if dproj[i].is_empty() || c < model.num_inputs || is_zero(c) {
                        continue;
                    }
                    let arity = model.predicates[c].arity();
                    let dst = if model.layer_of(c) < layer {
                        &mut g_cur[c]
                    } else {
                        &mut g_prev[c]
                    };
                    unproject(&dproj[i], arity, n, dst);
                }
            }
        }
        g_cur = g_prev;
        g_t = g_prev_t;
    }
    Gradients {
        d_alpha,
        ties: TieReport { near_ties: ties.count },
    }
}
