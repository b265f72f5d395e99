//! Shared bookkeeping for all search controllers: the evaluated set,
//! the growing labeled dataset, and exhaustion-guarded random fills.

use crate::bench::{Backend, QueryLedger, Split};
use crate::controller::Dataset;
use crate::error::{Error, Result};
use crate::search::{SearchHistory, Source};
use crate::space::{canonical_hash, random_architecture, CellGraph, SearchSpaceSpec};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

/// Bound on consecutive failed draws before the space is declared
/// exhausted (duplicates or tabular misses only; never real errors).
const MAX_RANDOM_DRAWS: usize = 200_000;

pub(crate) struct SearchState<'a> {
    pub backend: &'a Backend,
    pub ledger: &'a QueryLedger,
    pub history: SearchHistory,
    pub seen: BTreeSet<String>,
    pub labeled: Dataset,
}

impl<'a> SearchState<'a> {
    pub fn new(backend: &'a Backend, ledger: &'a QueryLedger) -> Self {
        SearchState {
            backend,
            ledger,
            history: SearchHistory::new(),
            seen: BTreeSet::new(),
            labeled: Dataset::new(),
        }
    }

    /// Evaluates `g` if it is novel and answerable. Returns the accuracy
    /// when a ground-truth query actually happened. Duplicates and
    /// tabular misses return None without touching the ledger.
    pub fn try_evaluate(
        &mut self,
        g: &CellGraph,
        iter: usize,
        source: Source,
    ) -> Result<Option<f64>> {
        let hash = canonical_hash(g);
        if self.seen.contains(&hash) {
            return Ok(None);
        }
        match self.backend.query(g, self.ledger, Split::Valid) {
            Ok(acc) => {
                self.seen.insert(hash.clone());
                self.labeled.push_ground_truth(g.clone(), acc)?;
                self.history
                    .push(iter, g.clone(), hash, acc, source, self.ledger.count());
                Ok(Some(acc))
            }
            Err(Error::UnknownArchitecture { .. }) => {
                // unanswerable forever: remember so we stop proposing it
                self.seen.insert(hash);
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }

    /// Draws random architectures until one novel evaluation lands.
    pub fn random_novel(
        &mut self,
        space: &SearchSpaceSpec,
        rng: &mut ChaCha8Rng,
        iter: usize,
        source: Source,
    ) -> Result<f64> {
        for _ in 0..MAX_RANDOM_DRAWS {
            let g = random_architecture(space, rng);
            if let Some(acc) = self.try_evaluate(&g, iter, source)? {
                return Ok(acc);
            }
        }
        Err(self.exhausted())
    }

    pub fn exhausted(&self) -> Error {
        Error::BudgetExhausted {
            evaluated: self.history.len(),
            partial: Box::new(self.history.clone()),
        }
    }
}
