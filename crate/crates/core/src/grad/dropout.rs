//! Inverted dropout: kept units are rescaled by 1/keep so the expected
//! output equals the input.

use crate::grad::tensor::Tensor2;
use rand::Rng;

#[derive(Clone, Debug)]
pub struct DropoutMask {
    factors: Vec<f64>, // 0.0 for dropped units, 1/keep for kept ones
}

impl DropoutMask {
    /// `rate` is the drop probability; 0 yields the identity mask.
    pub fn sample<R: Rng>(len: usize, rate: f64, rng: &mut R) -> Self {
        assert!((0.0..1.0).contains(&rate), "dropout rate must be in [0,1)");
        if rate == 0.0 {
            return DropoutMask {
                factors: vec![1.0; len],
            };
        }
        let keep = 1.0 - rate;
        let factors = (0..len)
            .map(|_| {
                if rng.gen_range(0.0..1.0) < keep {
                    1.0 / keep
                } else {
                    0.0
                }
            })
            .collect();
        DropoutMask { factors }
    }

    pub fn identity(len: usize) -> Self {
        DropoutMask {
            factors: vec![1.0; len],
        }
    }

    pub fn apply(&self, t: &mut Tensor2) {
        debug_assert_eq!(t.len(), self.factors.len());
        for (v, f) in t.values_mut().iter_mut().zip(&self.factors) {
            *v *= f;
        }
    }

    /// dL/dx = dL/dy * factor
    pub fn backward(&self, t: &mut Tensor2) {
        for (g, f) in t.grad_mut().iter_mut().zip(&self.factors) {
            *g *= f;
        }
    }

    pub fn factors(&self) -> &[f64] {
        &self.factors
    }
}
