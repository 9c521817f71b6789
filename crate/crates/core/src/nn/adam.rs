//! Adam optimizer over flat parameter slices.
//!
//! Moment buffers are kept as one vector per parameter tensor, aligned with
//! the network's fixed parameter walk, so the optimizer stays agnostic of
//! layer structure.

use crate::scalar::Real;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamHyper<F> {
    pub lr: F,
    pub beta1: F,
    pub beta2: F,
    pub eps: F,
}

impl<F: Real> Default for AdamHyper<F> {
    fn default() -> Self {
        Self {
            lr: F::of_f64(1.0e-4),
            beta1: F::of_f64(0.9),
            beta2: F::of_f64(0.999),
            eps: F::of_f64(1.0e-8),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState<F> {
    pub hyper: AdamHyper<F>,
    t: u64,
    m: Vec<Vec<F>>,
    v: Vec<Vec<F>>,
}

impl<F: Real> AdamState<F> {
    pub fn new(hyper: AdamHyper<F>, tensor_sizes: &[usize]) -> Self {
        Self {
            hyper,
            t: 0,
            m: tensor_sizes.iter().map(|&n| vec![F::zero(); n]).collect(),
            v: tensor_sizes.iter().map(|&n| vec![F::zero(); n]).collect(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    /// One update. `params` and `grads` must follow the tensor walk the
    /// state was built from.
    pub fn step(&mut self, params: &mut [&mut [F]], grads: &[&[F]]) {
        assert_eq!(params.len(), self.m.len(), "tensor count mismatch");
        assert_eq!(grads.len(), self.m.len(), "tensor count mismatch");
        self.t += 1;
        let h = self.hyper;
        let one = F::one();
        let bc1 = one - h.beta1.powi(self.t.min(i32::MAX as u64) as i32);
        let bc2 = one - h.beta2.powi(self.t.min(i32::MAX as u64) as i32);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads.iter())
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            assert_eq!(p.len(), m.len(), "tensor size mismatch");
            assert_eq!(g.len(), m.len(), "tensor size mismatch");
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = h.beta1 * m[i] + (one - h.beta1) * gi;
                v[i] = h.beta2 * v[i] + (one - h.beta2) * gi * gi;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= h.lr * m_hat / (v_hat.sqrt() + h.eps);
            }
        }
    }
}
