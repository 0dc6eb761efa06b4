use super::{EncoderParams, Gradients, TrainConfig};
use crate::linalg::DenseMatrix;

/// First and second moment estimates for both weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    m: [DenseMatrix; 2],
    v: [DenseMatrix; 2],
}

impl AdamState {
    pub fn new(params: &EncoderParams) -> Self {
        let z0 = DenseMatrix::zeros(params.w0.rows(), params.w0.cols());
        let z1 = DenseMatrix::zeros(params.w1.rows(), params.w1.cols());
        Self {
            step: 0,
            m: [z0.clone(), z1.clone()],
            v: [z0, z1],
        }
    }
}

/// One bias-corrected Adam update of both weights.
pub fn adam_step(params: &mut EncoderParams, grads: &Gradients, state: &mut AdamState, config: &TrainConfig) {
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (config.beta1, config.beta2);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    let targets = [(&mut params.w0, &grads.w0), (&mut params.w1, &grads.w1)];
    for (k, (w, g)) in targets.into_iter().enumerate() {
        let m = state.m[k].as_mut_slice();
        let v = state.v[k].as_mut_slice();
        for (((p, &gi), mi), vi) in w.as_mut_slice().iter_mut().zip(g.as_slice()).zip(m).zip(v) {
            *mi = b1 * *mi + (1.0 - b1) * gi;
            *vi = b2 * *vi + (1.0 - b2) * gi * gi;
            let m_hat = *mi / c1;
            let v_hat = *vi / c2;
            *p -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
        }
    }
}
