//! First-order optimisers over flat parameter vectors.

use serde::{Deserialize, Serialize};

use crate::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Sgd,
}

#[derive(Clone, Debug)]
pub struct Sgd {
    pub lr: f64,
}

impl Sgd {
    pub fn step<S: Scalar>(&mut self, params: &mut [S], grad: &[S]) {
        let lr = S::lit(self.lr);
        for (p, &g) in params.iter_mut().zip(grad) {
            *p -= lr * g;
        }
    }
}

/// Adam with the usual bias correction.
#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(lr: f64, len: usize) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    pub fn step<S: Scalar>(&mut self, params: &mut [S], grad: &[S]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (i, (p, &g)) in params.iter_mut().zip(grad).enumerate() {
            let g = g.as_f64();
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            *p -= S::lit(self.lr * mh / (vh.sqrt() + self.eps));
        }
    }
}

#[derive(Clone, Debug)]
pub enum Optimizer {
    Adam(Adam),
    Sgd(Sgd),
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, len: usize) -> Self {
        match kind {
            OptimizerKind::Adam => Optimizer::Adam(Adam::new(lr, len)),
            OptimizerKind::Sgd => Optimizer::Sgd(Sgd { lr }),
        }
    }

    pub fn step<S: Scalar>(&mut self, params: &mut [S], grad: &[S]) {
        match self {
            Optimizer::Adam(a) => a.step(params, grad),
            Optimizer::Sgd(s) => s.step(params, grad),
        }
    }
}
