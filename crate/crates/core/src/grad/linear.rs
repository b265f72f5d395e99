//! Fully connected layer with explicit forward/backward.

use crate::error::{Error, Result};
use crate::grad::tensor::Tensor2;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// output[b,j] = sum_k input[b,k] * weights[k,j] + bias[j]
pub fn linear_forward(input: &Tensor2, weights: &Tensor2, bias: &[f64]) -> Result<Tensor2> {
    if input.cols() != weights.rows() {
        return Err(Error::Dimension {
            op: "linear_forward",
            left: input.shape_str(),
            right: weights.shape_str(),
        });
    }
    if bias.len() != weights.cols() {
        return Err(Error::Dimension {
            op: "linear_forward bias",
            left: format!("len {}", bias.len()),
            right: weights.shape_str(),
        });
    }
    let (b, out) = (input.rows(), weights.cols());
    let mut output = Tensor2::zeros(b, out);
    for i in 0..b {
        let orow = output.row_mut(i);
        orow.copy_from_slice(bias);
        let irow = input.row(i);
        for (k, &x) in irow.iter().enumerate() {
            if x != 0.0 {
                let wrow = weights.row(k);
                for (o, w) in orow.iter_mut().zip(wrow) {
                    *o += x * w;
                }
            }
        }
    }
    Ok(output)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Linear {
    pub weight: Tensor2,
    pub bias: Tensor2, // 1 x out
}

impl Linear {
    pub fn new<R: Rng>(input: usize, output: usize, scale: f64, rng: &mut R) -> Self {
        Linear {
            weight: Tensor2::uniform(input, output, scale, rng),
            bias: Tensor2::uniform(1, output, scale, rng),
        }
    }

    pub fn input_size(&self) -> usize {
        self.weight.rows()
    }

    pub fn output_size(&self) -> usize {
        self.weight.cols()
    }

    pub fn forward(&self, input: &Tensor2) -> Result<Tensor2> {
        linear_forward(input, &self.weight, self.bias.values())
    }

    /// Reads `output.grad`, accumulates into `input.grad` and the
    /// parameter gradients.
    pub fn backward(&mut self, input: &mut Tensor2, output: &Tensor2) {
        debug_assert_eq!(output.cols(), self.weight.cols());
        debug_assert_eq!(input.cols(), self.weight.rows());
        let (b, inp, out) = (input.rows(), self.weight.rows(), self.weight.cols());
        for i in 0..b {
            let dout = output.grad_row(i);
            // bias grad
            for (bg, d) in self.bias.grad_mut()[..out].iter_mut().zip(dout) {
                *bg += d;
            }
            for k in 0..inp {
                let x = input.at(i, k);
                let wrow = self.weight.row(k);
                // input grad: dot(dout, w[k,:])
                let mut acc = 0.0;
                for (d, w) in dout.iter().zip(wrow) {
                    acc += d * w;
                }
                input.grad_mut()[i * inp + k] += acc;
                // weight grad: x * dout
                if x != 0.0 {
                    let wg = self.weight.grad_row_mut(k);
                    for (g, d) in wg.iter_mut().zip(dout) {
                        *g += x * d;
                    }
                }
            }
        }
    }
}
