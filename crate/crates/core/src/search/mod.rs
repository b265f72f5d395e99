//! Search controllers over the cell space: the gradient-ascent loop, its
//! supervised-only baseline, random search, regularized evolution, and
//! predictor-filtered evolution. All of them share exact query
//! accounting: no architecture is ground-truth-evaluated twice and the
//! ledger count matches the preset formula on termination.

mod ascent;
mod evolution;
mod random_search;
mod seminas_loop;
mod state;

pub use ascent::{gradient_ascent_step, AscentStep};
pub use evolution::{run_re, run_semi_re, EvolutionParams, SemiReParams};
pub use random_search::run_random;
pub use seminas_loop::{run_nao, run_seminas};

use crate::space::CellGraph;
use serde::{Deserialize, Serialize};

/// Query budget and loop shape for the gradient-ascent controllers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    /// N: initial random architectures evaluated with ground truth.
    pub n_initial: usize,
    /// M: unlabeled architectures generated fresh each iteration.
    pub m_unlabeled: usize,
    /// K: seeds taken from the top of the mixed dataset each iteration.
    pub k_seeds: usize,
    /// L: optimization iterations.
    pub iterations: usize,
    /// Eta: gradient ascent step size.
    pub step_size: f64,
    /// Architectures evaluated per iteration.
    pub new_per_iteration: usize,
    /// T: evaluator training steps per architecture (informational; the
    /// total evaluator cost is C = N x T).
    pub steps_per_eval: usize,
}

impl SearchBudget {
    /// Ground-truth query count implied by the budget.
    pub fn total_queries(&self) -> usize {
        self.n_initial + self.new_per_iteration * self.iterations
    }
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            n_initial: 100,
            m_unlabeled: 2000,
            k_seeds: 100,
            iterations: 2,
            step_size: 1.0,
            new_per_iteration: 100,
            steps_per_eval: 108,
        }
    }
}

/// How a candidate reached the evaluator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Random,
    Ascent,
    Mutation,
    Evolution,
    FilteredEvolution,
}

/// One ground-truth evaluation. Serialized as a newline-delimited record
/// `{iter, hash, accuracy, source, cumulative_best, ledger}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub iter: usize,
    pub hash: String,
    pub accuracy: f64,
    pub source: Source,
    pub cumulative_best: f64,
    pub ledger: usize,
    /// Carried in memory for reporting; not part of the line format.
    #[serde(skip, default = "CellGraph::minimal")]
    pub graph: CellGraph,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchHistory {
    pub records: Vec<EvalRecord>,
}

impl SearchHistory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Appends an evaluation, maintaining the running best.
    pub fn push(
        &mut self,
        iter: usize,
        graph: CellGraph,
        hash: String,
        accuracy: f64,
        source: Source,
        ledger: usize,
    ) {
        let cumulative_best = self
            .records
            .last()
            .map(|r| r.cumulative_best.max(accuracy))
            .unwrap_or(accuracy);
        self.records.push(EvalRecord {
            iter,
            hash,
            accuracy,
            source,
            cumulative_best,
            ledger,
            graph,
        });
    }

    /// Record with the maximum accuracy (the earliest on ties).
    pub fn best(&self) -> Option<&EvalRecord> {
        let mut best: Option<&EvalRecord> = None;
        for r in &self.records {
            if best.map(|b| r.accuracy > b.accuracy).unwrap_or(true) {
                best = Some(r);
            }
        }
        best
    }

    pub fn to_ndjson(&self) -> crate::Result<String> {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_ndjson(text: &str) -> crate::Result<Self> {
        let mut records = Vec::new();
        for line in text.lines() {
            if line.trim().is_empty() {
                continue;
            }
            records.push(serde_json::from_str(line)?);
        }
        Ok(SearchHistory { records })
    }
}

#[cfg(test)]
mod history_tests {
    use super::*;

    #[test]
    fn cumulative_best_is_monotone() {
        let mut h = SearchHistory::new();
        for (i, acc) in [0.5, 0.4, 0.7, 0.6].iter().enumerate() {
            h.push(
                0,
                CellGraph::minimal(),
                format!("h{i}"),
                *acc,
                Source::Random,
                i + 1,
            );
        }
        let bests: Vec<f64> = h.records.iter().map(|r| r.cumulative_best).collect();
        assert_eq!(bests, vec![0.5, 0.5, 0.7, 0.7]);
        assert_eq!(h.best().unwrap().hash, "h2");
        assert_eq!(h.best().unwrap().accuracy, 0.7);
    }

    #[test]
    fn ndjson_round_trip_preserves_line_fields() {
        let mut h = SearchHistory::new();
        h.push(1, CellGraph::minimal(), "abc".into(), 0.25, Source::Ascent, 7);
        let text = h.to_ndjson().unwrap();
        assert!(
            text.starts_with(
                r#"{"iter":1,"hash":"abc","accuracy":0.25,"source":"ascent","cumulative_best":0.25,"ledger":7}"#
            ),
            "unexpected line format: {text}"
        );
        let back = SearchHistory::from_ndjson(&text).unwrap();
        assert_eq!(back.records[0].hash, "abc");
        assert_eq!(back.records[0].ledger, 7);
    }
}
