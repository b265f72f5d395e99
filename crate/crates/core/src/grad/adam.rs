//! Adam with bias correction, plus global-norm gradient clipping.

use crate::error::{Error, Result};
use crate::grad::tensor::{Parameterized, Tensor2};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AdamState {
    step: u64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    moments: Vec<Moment>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Moment {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    pub fn new(learning_rate: f64) -> Self {
        AdamState {
            step: 0,
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            moments: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update over every parameter tensor, in order.
    /// Moment buffers are allocated lazily on first use and must keep
    /// matching shapes afterwards.
    pub fn update(&mut self, params: &mut [(String, &mut Tensor2)]) -> Result<()> {
        if self.moments.is_empty() {
            self.moments = params
                .iter()
                .map(|(_, t)| Moment {
                    m: vec![0.0; t.len()],
                    v: vec![0.0; t.len()],
                })
                .collect();
        }
        if self.moments.len() != params.len() {
            return Err(Error::Dimension {
                op: "adam_update",
                left: format!("{} moment blocks", self.moments.len()),
                right: format!("{} parameters", params.len()),
            });
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for ((name, tensor), moment) in params.iter_mut().zip(&mut self.moments) {
            if moment.m.len() != tensor.len() {
                return Err(Error::Dimension {
                    op: "adam_update",
                    left: format!("moment len {}", moment.m.len()),
                    right: format!("{name} len {}", tensor.len()),
                });
            }
            for k in 0..tensor.len() {
                let g = tensor.grad()[k];
                if !g.is_finite() {
                    return Err(Error::NonFinite(format!("gradient of {name}[{k}]")));
                }
                let m = self.beta1 * moment.m[k] + (1.0 - self.beta1) * g;
                let v = self.beta2 * moment.v[k] + (1.0 - self.beta2) * g * g;
                moment.m[k] = m;
                moment.v[k] = v;
                let m_hat = m / bc1;
                let v_hat = v / bc2;
                tensor.values_mut()[k] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}

/// Scales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the pre-clip norm.
pub fn clip_global_norm(params: &mut [(String, &mut Tensor2)], max_norm: f64) -> f64 {
    let mut sq = 0.0;
    for (_, t) in params.iter() {
        for g in t.grad() {
            sq += g * g;
        }
    }
    let norm = sq.sqrt();
    if norm > max_norm && norm > 0.0 {
        let scale = max_norm / norm;
        for (_, t) in params.iter_mut() {
            for g in t.grad_mut() {
                *g *= scale;
            }
        }
    }
    norm
}

/// Convenience: clip + Adam step over a `Parameterized` model.
pub fn optimize_step<M: Parameterized>(
    model: &mut M,
    adam: &mut AdamState,
    max_norm: f64,
) -> Result<()> {
    let mut params = model.named_params_mut();
    clip_global_norm(&mut params, max_norm);
    adam.update(&mut params)
}
