//! Adam with lazily updated rows: only rows that received gradient in the
//! current step move; the bias correction uses the global step count.

use crate::models::{DenseGrad, Tensor};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
    pub step: u64,
}

impl OptimizerState {
    pub fn new(params: &[Tensor]) -> Self {
        let zeros = |t: &Tensor| Tensor::zeros(&t.name, t.rows, t.cols);
        OptimizerState {
            m: params.iter().map(zeros).collect(),
            v: params.iter().map(zeros).collect(),
            step: 0,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.m
            .iter()
            .chain(&self.v)
            .all(|t| t.data.iter().all(|x| x.is_finite()))
    }
}

/// One bias-corrected Adam update over the touched rows of `grads`.
pub fn adam_step(params: &mut [Tensor], grads: &DenseGrad, state: &mut OptimizerState, lr: f64) {
    state.step += 1;
    let t = state.step as f64;
    let bc1 = 1.0 - BETA1.powf(t);
    let bc2 = 1.0 - BETA2.powf(t);
    for (i, p) in params.iter_mut().enumerate() {
        let g = &grads.grads[i];
        let (m, v) = (&mut state.m[i], &mut state.v[i]);
        for &row in grads.touched_rows(i) {
            let range = row * p.cols..(row + 1) * p.cols;
            for k in range {
                let gk = g.data[k];
                m.data[k] = BETA1 * m.data[k] + (1.0 - BETA1) * gk;
                v.data[k] = BETA2 * v.data[k] + (1.0 - BETA2) * gk * gk;
                let mhat = m.data[k] / bc1;
                let vhat = v.data[k] / bc2;
                p.data[k] -= lr * mhat / (vhat.sqrt() + EPSILON);
            }
        }
    }
}
