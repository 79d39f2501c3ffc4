use protoilp::inference::{compute_scores, forward, Instance};
use protoilp::logic::{FALSE, TRUE};
use protoilp::model::{build_model, ModelConfig, RuleShape};
use protoilp::tasks::{generate_task, TaskName, TaskSpec};

/// Fuzzy-AND evaluations for `steps` steps on `n` constants with every
/// non-builtin input fact set to 0.5.
fn ops(n: usize, steps: usize) -> (u64, u64) {
    let t = generate_task(&TaskSpec::new(TaskName::Grandparent, n, 0)).unwrap();
    let model = build_model::<f64>(&ModelConfig::default(), &t.predicates, &t.target, 0).unwrap();
    let mut inst = Instance::new(&t, model.inputs()).unwrap();
    for (p, v) in model.inputs().iter().zip(inst.inputs.iter_mut()) {
        if p.name != TRUE && p.name != FALSE {
            v.iter_mut().for_each(|x| *x = 0.5);
        }
    }
    let scores = compute_scores(&model, None).unwrap();
    let count = forward(&model, &scores, &inst, steps, false).op_count;
    // |P_l| * |P_l↓|^2 * n^2 per layer, times n for the existential shape.
    let bound: u64 = model
        .aux
        .iter()
        .filter(|a| a.rule.has_conjunction())
        .map(|a| {
            let k = a.candidates.len() as u64;
            let cell = if a.rule.shape == RuleShape::B { n.pow(3) } else { n.pow(2) } as u64;
            k * k * cell
        })
        .sum::<u64>()
        * steps as u64;
    (count, bound)
}

#[test]
fn work_per_step_is_within_the_layer_bound() {
    for n in [4, 6, 8] {
        for steps in [1, 2, 3] {
            let (count, bound) = ops(n, steps);
            assert!(count > 0 && count <= bound, "n={n} steps={steps}: {count} > {bound}");
        }
    }
}

#[test]
fn work_grows_at_most_cubically_in_constants() {
    let (small, _) = ops(4, 2);
    let (large, _) = ops(8, 2);
    let ratio = large as f64 / small as f64;
    assert!((4.0..=8.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn later_steps_do_the_full_amount_of_work() {
    let (one, _) = ops(5, 1);
    let (two, _) = ops(5, 2);
    let (three, _) = ops(5, 3);
    assert!(two - one >= one, "step 1 skips not-yet-derived predicates");
    assert_eq!(three - two, two - one);
}
