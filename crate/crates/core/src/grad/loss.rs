//! Losses. Each loss fills the gradient of its input tensor.

use crate::grad::tensor::Tensor2;

/// Mean squared error over a (B x 1) prediction column.
/// Writes dL/dpred into `pred.grad` (accumulating).
pub fn mse_loss(pred: &mut Tensor2, targets: &[f64]) -> f64 {
    debug_assert_eq!(pred.rows(), targets.len());
    debug_assert_eq!(pred.cols(), 1);
    let n = targets.len() as f64;
    let mut loss = 0.0;
    for (i, &y) in targets.iter().enumerate() {
        let d = pred.at(i, 0) - y;
        loss += d * d;
        pred.grad_mut()[i] += 2.0 * d / n;
    }
    loss / n
}

/// Softmax cross-entropy over a (B x V) logit block against integer
/// targets. `norm` is the denominator used for averaging (so per-step
/// calls over a sequence can jointly average over batch x steps).
/// Returns (summed loss / norm contribution, #argmax hits).
pub fn softmax_ce_loss(logits: &mut Tensor2, targets: &[usize], norm: f64) -> (f64, usize) {
    debug_assert_eq!(logits.rows(), targets.len());
    let v = logits.cols();
    let mut loss = 0.0;
    let mut correct = 0;
    for (i, &y) in targets.iter().enumerate() {
        debug_assert!(y < v);
        let row = logits.row(i);
        let mut max = f64::NEG_INFINITY;
        let mut argmax = 0;
        for (j, &x) in row.iter().enumerate() {
            if x > max {
                max = x;
                argmax = j;
            }
        }
        if argmax == y {
            correct += 1;
        }
        let mut z = 0.0;
        for &x in row {
            z += (x - max).exp();
        }
        let log_z = z.ln() + max;
        loss += (log_z - row[y]) / norm;
        let base = i * v;
        for j in 0..v {
            let p = (logits.at(i, j) - log_z).exp();
            let indicator = if j == y { 1.0 } else { 0.0 };
            logits.grad_mut()[base + j] += (p - indicator) / norm;
        }
    }
    (loss, correct)
}
