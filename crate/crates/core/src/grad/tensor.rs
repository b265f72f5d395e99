//! Dense 2-d tensor with paired gradient storage.
//!
//! Row-major, 64-bit. Every tensor carries a gradient buffer of identical
//! shape; forward code writes `values`, backward code accumulates into
//! `grad`. There is no tape: layers wire their own backward passes.

use crate::error::{Error, Result};
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct Tensor2 {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    #[serde(skip)]
    grad: Vec<f64>,
}

impl Tensor2 {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor2 {
            rows,
            cols,
            values: vec![0.0; rows * cols],
            grad: vec![0.0; rows * cols],
        }
    }

    /// Entries drawn uniformly from [-scale, scale].
    pub fn uniform<R: Rng>(rows: usize, cols: usize, scale: f64, rng: &mut R) -> Self {
        let mut t = Self::zeros(rows, cols);
        for v in &mut t.values {
            *v = rng.gen_range(-scale..=scale);
        }
        t
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map(Vec::len).unwrap_or(0);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::Dimension {
                op: "from_rows",
                left: format!("{r} rows"),
                right: "ragged row lengths".into(),
            });
        }
        Ok(Tensor2 {
            rows: r,
            cols: c,
            values: rows.into_iter().flatten().collect(),
            grad: vec![0.0; r * c],
        })
    }

    pub fn from_values(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::Dimension {
                op: "from_values",
                left: format!("{rows}x{cols}"),
                right: format!("{} values", values.len()),
            });
        }
        let grad = vec![0.0; values.len()];
        Ok(Tensor2 {
            rows,
            cols,
            values,
            grad,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn shape_str(&self) -> String {
        format!("{}x{}", self.rows, self.cols)
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn grad_row(&self, i: usize) -> &[f64] {
        &self.grad[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn grad_row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.grad[i * self.cols..(i + 1) * self.cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    pub fn grad_mut(&mut self) -> &mut [f64] {
        &mut self.grad
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = 0.0);
    }

    /// Restores the values/grad shape pairing after deserialization
    /// (the gradient buffer is not persisted).
    pub fn ensure_grad(&mut self) {
        if self.grad.len() != self.values.len() {
            self.grad = vec![0.0; self.values.len()];
        }
    }

    pub fn check_finite(&self, context: &str) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite(context.to_string()))
        }
    }
}

/// Parameter-bearing structure whose tensors can be visited generically.
/// Used by the optimizer and the finite-difference gradient checker.
pub trait Parameterized {
    fn named_params_mut(&mut self) -> Vec<(String, &mut Tensor2)>;

    fn zero_grad(&mut self) {
        for (_, t) in self.named_params_mut() {
            t.zero_grad();
        }
    }

    fn param_count(&mut self) -> usize {
        self.named_params_mut().iter().map(|(_, t)| t.len()).sum()
    }
}
