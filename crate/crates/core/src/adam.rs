//! Adam with bias correction.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::network::{Gradients, NetworkParams};

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub step: u64,
    /// One buffer per trainable tensor, in parameter enumeration order.
    pub first_moment: Vec<Vec<f32>>,
    pub second_moment: Vec<Vec<f32>>,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub learning_rate: f64,
}

impl AdamState {
    pub const BETA1: f64 = 0.9;
    pub const BETA2: f64 = 0.999;
    pub const EPSILON: f64 = 1e-8;

    pub fn new(params: &NetworkParams, learning_rate: f64) -> Result<Self> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {learning_rate}"
            )));
        }
        let zeros: Vec<Vec<f32>> = params.tensors().iter().map(|t| vec![0.0; t.data.len()]).collect();
        Ok(Self {
            step: 0,
            second_moment: zeros.clone(),
            first_moment: zeros,
            beta1: Self::BETA1,
            beta2: Self::BETA2,
            epsilon: Self::EPSILON,
            learning_rate,
        })
    }

    /// Applies one update in place. A non-finite gradient aborts before any
    /// parameter or moment changes.
    pub fn step(&mut self, params: &mut NetworkParams, grads: &Gradients) -> Result<()> {
        let g_tensors = grads.tensors();
        if g_tensors.len() != self.first_moment.len() {
            return Err(Error::shape(None, "gradient tensor count differs from optimizer state"));
        }
        for (g, m) in g_tensors.iter().zip(&self.first_moment) {
            if g.data.len() != m.len() {
                return Err(Error::shape(Some(g.layer), format!("{} size", g.name())));
            }
            if let Some(pos) = g.data.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteGradient {
                    param: format!("{}[{pos}]", g.name()),
                });
            }
        }

        self.step += 1;
        let t = self.step as f64;
        let bc1 = 1.0 - libm::pow(self.beta1, t);
        let bc2 = 1.0 - libm::pow(self.beta2, t);
        let (b1, b2, eps, lr) = (self.beta1, self.beta2, self.epsilon, self.learning_rate);

        let targets = params.tensors_mut();
        for (((p, g), m), v) in targets
            .into_iter()
            .zip(&g_tensors)
            .zip(self.first_moment.iter_mut())
            .zip(self.second_moment.iter_mut())
        {
            for (((p, &g), m), v) in p.iter_mut().zip(g.data).zip(m.iter_mut()).zip(v.iter_mut()) {
                let g = g as f64;
                let m_new = b1 * *m as f64 + (1.0 - b1) * g;
                let v_new = b2 * *v as f64 + (1.0 - b2) * g * g;
                *m = m_new as f32;
                *v = v_new as f32;
                let m_hat = m_new / bc1;
                let v_hat = v_new / bc2;
                *p = (*p as f64 - lr * m_hat / (libm::sqrt(v_hat) + eps)) as f32;
            }
        }
        Ok(())
    }
}
