//! Token embedding table.

use crate::error::{Error, Result};
use crate::grad::tensor::Tensor2;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Embedding {
    pub table: Tensor2, // vocab x dim
}

impl Embedding {
    pub fn new<R: Rng>(vocab: usize, dim: usize, scale: f64, rng: &mut R) -> Self {
        Embedding {
            table: Tensor2::uniform(vocab, dim, scale, rng),
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.table.rows()
    }

    pub fn dim(&self) -> usize {
        self.table.cols()
    }

    /// Gathers one row per id into a (B x dim) tensor.
    pub fn forward(&self, ids: &[usize]) -> Result<Tensor2> {
        let mut out = Tensor2::zeros(ids.len(), self.dim());
        for (i, &id) in ids.iter().enumerate() {
            if id >= self.vocab_size() {
                return Err(Error::UnknownToken {
                    id,
                    alphabet: self.vocab_size(),
                });
            }
            out.row_mut(i).copy_from_slice(self.table.row(id));
        }
        Ok(out)
    }

    /// Scatter-adds `output.grad` back into the table rows.
    pub fn backward(&mut self, ids: &[usize], output: &Tensor2) {
        for (i, &id) in ids.iter().enumerate() {
            let dout = output.grad_row(i);
            let trow = self.table.grad_row_mut(id);
            for (g, d) in trow.iter_mut().zip(dout) {
                *g += d;
            }
        }
    }
}
