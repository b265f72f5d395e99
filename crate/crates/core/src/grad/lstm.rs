//! Single-layer gated recurrent cell (input/forget/output gates plus cell
//! candidate) with hand-rolled backpropagation through time.

use crate::error::{Error, Result};
use crate::grad::tensor::Tensor2;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Gate weights. Pre-activations are `x * w_x + h_prev * w_h + b`, laid out
/// as four H-wide blocks in the order [input, forget, candidate, output].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LstmCell {
    input_size: usize,
    hidden_size: usize,
    pub w_x: Tensor2, // input_size x 4H
    pub w_h: Tensor2, // hidden_size x 4H
    pub b: Tensor2,   // 1 x 4H
}

/// Per-step cache holding everything the backward pass needs.
/// `h.grad` and `c.grad` are the accumulation points for upstream
/// gradients before `step_backward` runs.
#[derive(Clone, Debug)]
pub struct LstmStep {
    pub gates: Tensor2,  // B x 4H, post-activation
    pub c: Tensor2,      // B x H
    pub tanh_c: Tensor2, // B x H
    pub h: Tensor2,      // B x H
}

impl LstmCell {
    pub fn new<R: Rng>(input_size: usize, hidden_size: usize, scale: f64, rng: &mut R) -> Self {
        LstmCell {
            input_size,
            hidden_size,
            w_x: Tensor2::uniform(input_size, 4 * hidden_size, scale, rng),
            w_h: Tensor2::uniform(hidden_size, 4 * hidden_size, scale, rng),
            b: Tensor2::uniform(1, 4 * hidden_size, scale, rng),
        }
    }

    pub fn input_size(&self) -> usize {
        self.input_size
    }

    pub fn hidden_size(&self) -> usize {
        self.hidden_size
    }

    pub fn step(&self, x: &Tensor2, h_prev: &Tensor2, c_prev: &Tensor2) -> Result<LstmStep> {
        let (bsz, h) = (x.rows(), self.hidden_size);
        if x.cols() != self.input_size {
            return Err(Error::Dimension {
                op: "lstm step input",
                left: x.shape_str(),
                right: format!("{}x{}", self.input_size, 4 * h),
            });
        }
        if h_prev.shape() != (bsz, h) || c_prev.shape() != (bsz, h) {
            return Err(Error::Dimension {
                op: "lstm step state",
                left: h_prev.shape_str(),
                right: format!("{bsz}x{h}"),
            });
        }

        // pre-activations
        let mut gates = Tensor2::zeros(bsz, 4 * h);
        for i in 0..bsz {
            let row = gates.row_mut(i);
            row.copy_from_slice(self.b.row(0));
            for (k, &xv) in x.row(i).iter().enumerate() {
                if xv != 0.0 {
                    for (a, w) in row.iter_mut().zip(self.w_x.row(k)) {
                        *a += xv * w;
                    }
                }
            }
            for (k, &hv) in h_prev.row(i).iter().enumerate() {
                if hv != 0.0 {
                    for (a, w) in row.iter_mut().zip(self.w_h.row(k)) {
                        *a += hv * w;
                    }
                }
            }
        }

        // activations
        let mut c = Tensor2::zeros(bsz, h);
        let mut tanh_c = Tensor2::zeros(bsz, h);
        let mut hs = Tensor2::zeros(bsz, h);
        for i in 0..bsz {
            let row = gates.row_mut(i);
            for j in 0..h {
                row[j] = sigmoid(row[j]); // input gate
                row[h + j] = sigmoid(row[h + j]); // forget gate
                row[2 * h + j] = row[2 * h + j].tanh(); // candidate
                row[3 * h + j] = sigmoid(row[3 * h + j]); // output gate
            }
            for j in 0..h {
                let cv = row[h + j] * c_prev.at(i, j) + row[j] * row[2 * h + j];
                c.set(i, j, cv);
                let tc = cv.tanh();
                tanh_c.set(i, j, tc);
                hs.set(i, j, row[3 * h + j] * tc);
            }
        }

        Ok(LstmStep {
            gates,
            c,
            tanh_c,
            h: hs,
        })
    }

    /// Backward through one step. Upstream gradients must already be
    /// accumulated into `step.h.grad` and `step.c.grad`; this fills
    /// `x.grad`, `h_prev.grad`, `c_prev.grad` and the cell's parameter
    /// gradients.
    pub fn step_backward(
        &mut self,
        x: &mut Tensor2,
        h_prev: &mut Tensor2,
        c_prev: &mut Tensor2,
        step: &LstmStep,
    ) {
        let (bsz, h) = (x.rows(), self.hidden_size);
        let mut da = vec![0.0; 4 * h];
        for i in 0..bsz {
            let gates = step.gates.row(i);
            let dh = step.h.grad_row(i);
            let dc_ext = step.c.grad_row(i);
            for j in 0..h {
                let (ig, fg, gg, og) = (gates[j], gates[h + j], gates[2 * h + j], gates[3 * h + j]);
                let tc = step.tanh_c.at(i, j);
                let dc = dc_ext[j] + dh[j] * og * (1.0 - tc * tc);
                let d_o = dh[j] * tc;
                let d_i = dc * gg;
                let d_g = dc * ig;
                let d_f = dc * c_prev.at(i, j);
                c_prev.grad_mut()[i * h + j] += dc * fg;
                da[j] = d_i * ig * (1.0 - ig);
                da[h + j] = d_f * fg * (1.0 - fg);
                da[2 * h + j] = d_g * (1.0 - gg * gg);
                da[3 * h + j] = d_o * og * (1.0 - og);
            }
            // bias grads
            for (bg, d) in self.b.grad_mut().iter_mut().zip(&da) {
                *bg += d;
            }
            // w_x grads and input grads
            for k in 0..self.input_size {
                let xv = x.at(i, k);
                if xv != 0.0 {
                    let wg = self.w_x.grad_row_mut(k);
                    for (g, d) in wg.iter_mut().zip(&da) {
                        *g += xv * d;
                    }
                }
                let wrow = self.w_x.row(k);
                let mut acc = 0.0;
                for (d, w) in da.iter().zip(wrow) {
                    acc += d * w;
                }
                x.grad_mut()[i * self.input_size + k] += acc;
            }
            // w_h grads and h_prev grads
            for k in 0..h {
                let hv = h_prev.at(i, k);
                if hv != 0.0 {
                    let wg = self.w_h.grad_row_mut(k);
                    for (g, d) in wg.iter_mut().zip(&da) {
                        *g += hv * d;
                    }
                }
                let wrow = self.w_h.row(k);
                let mut acc = 0.0;
                for (d, w) in da.iter().zip(wrow) {
                    acc += d * w;
                }
                h_prev.grad_mut()[i * h + k] += acc;
            }
        }
    }
}

/// Single-vector step: returns (h_t, c_t).
pub fn recurrent_step(
    cell: &LstmCell,
    x: &[f64],
    h_prev: &[f64],
    c_prev: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() != cell.input_size() {
        return Err(Error::Dimension {
            op: "recurrent_step input",
            left: format!("len {}", x.len()),
            right: format!("len {}", cell.input_size()),
        });
    }
    if h_prev.len() != cell.hidden_size() || c_prev.len() != cell.hidden_size() {
        return Err(Error::Dimension {
            op: "recurrent_step state",
            left: format!("len {}/{}", h_prev.len(), c_prev.len()),
            right: format!("len {}", cell.hidden_size()),
        });
    }
    let x_t = Tensor2::from_values(1, x.len(), x.to_vec())?;
    let h_t = Tensor2::from_values(1, h_prev.len(), h_prev.to_vec())?;
    let c_t = Tensor2::from_values(1, c_prev.len(), c_prev.to_vec())?;
    let step = cell.step(&x_t, &h_t, &c_t)?;
    Ok((step.h.values().to_vec(), step.c.values().to_vec()))
}
