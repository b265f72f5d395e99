//! The surrogate controller: a sequence encoder, an accuracy predictor
//! and an autoregressive decoder trained jointly on a regression +
//! reconstruction mixture, with pseudo-labeling and up-sampled
//! semi-supervised retraining on top.

mod model;
mod train;

pub use model::{ControllerModel, INIT_SCALE, GRAD_CLIP};
pub use train::{
    fit_semi_supervised, fit_supervised, pseudo_label, upsample, EpochLoss, SemiFitOutcome,
    TrainReport,
};

use crate::error::{Error, Result};
use crate::space::{canonical_hash, CellGraph};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControllerConfig {
    pub hidden_size: usize,
    /// Layer output widths of the predictor; the final width must be 1
    /// (its output is squashed into (0,1)).
    pub predictor_widths: Vec<usize>,
    /// Mixture weight: loss = lambda * regression + (1 - lambda) * reconstruction.
    pub loss_weight_lambda: f64,
    pub learning_rate: f64,
    pub epochs_supervised: usize,
    pub epochs_semi: usize,
    pub dropout_rate: f64,
    /// Ground-truth records are duplicated this many times when mixed
    /// with pseudo-labeled data.
    pub upsample_ratio: usize,
    pub batch_size: usize,
    /// Optional hard caps on optimizer steps per phase (desk-scale
    /// runtime control for large mixed datasets).
    pub max_steps_supervised: Option<usize>,
    pub max_steps_semi: Option<usize>,
    /// Warm-start the semi-supervised phase from the supervised weights
    /// (the alternative is re-initialization).
    pub warm_start_semi: bool,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        ControllerConfig {
            hidden_size: 16,
            predictor_widths: vec![16, 64, 1],
            loss_weight_lambda: 0.8,
            learning_rate: 0.001,
            epochs_supervised: 1000,
            epochs_semi: 50,
            dropout_rate: 0.1,
            upsample_ratio: 100,
            batch_size: 100,
            max_steps_supervised: None,
            max_steps_semi: None,
            warm_start_semi: true,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_size == 0 {
            return Err(Error::Usage("hidden_size must be positive".into()));
        }
        if self.predictor_widths.last() != Some(&1) {
            return Err(Error::Usage(format!(
                "predictor final width must be 1, got {:?}",
                self.predictor_widths
            )));
        }
        if !(0.0..=1.0).contains(&self.loss_weight_lambda) {
            return Err(Error::Usage(format!(
                "loss_weight_lambda {} outside [0,1]",
                self.loss_weight_lambda
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Usage(format!(
                "dropout_rate {} outside [0,1)",
                self.dropout_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Usage("batch_size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    GroundTruth,
    Pseudo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub graph: CellGraph,
    pub hash: String,
    pub accuracy: f64,
    pub source: LabelSource,
}

/// Architecture-accuracy records. Ground-truth hashes are unique within
/// a dataset; accuracies live in [0, 1].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    records: Vec<LabeledPair>,
}

impl Dataset {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[LabeledPair] {
        &self.records
    }

    pub fn push_ground_truth(&mut self, graph: CellGraph, accuracy: f64) -> Result<()> {
        check_accuracy(accuracy)?;
        let hash = canonical_hash(&graph);
        if self
            .records
            .iter()
            .any(|r| r.source == LabelSource::GroundTruth && r.hash == hash)
        {
            return Err(Error::Usage(format!(
                "duplicate ground-truth architecture {hash}"
            )));
        }
        self.records.push(LabeledPair {
            graph,
            hash,
            accuracy,
            source: LabelSource::GroundTruth,
        });
        Ok(())
    }

    pub fn push_pseudo(&mut self, graph: CellGraph, accuracy: f64) -> Result<()> {
        check_accuracy(accuracy)?;
        let hash = canonical_hash(&graph);
        self.records.push(LabeledPair {
            graph,
            hash,
            accuracy,
            source: LabelSource::Pseudo,
        });
        Ok(())
    }

    /// Pushes a pre-built record verbatim (used by upsampling, where
    /// duplicate ground-truth hashes are the point).
    pub(crate) fn push_raw(&mut self, pair: LabeledPair) {
        self.records.push(pair);
    }

    pub fn ground_truth_hashes(&self) -> BTreeSet<String> {
        self.records
            .iter()
            .filter(|r| r.source == LabelSource::GroundTruth)
            .map(|r| r.hash.clone())
            .collect()
    }

    pub fn ground_truth_count(&self) -> usize {
        self.records
            .iter()
            .filter(|r| r.source == LabelSource::GroundTruth)
            .count()
    }

    /// Concatenation; the caller is responsible for hash discipline.
    pub fn union(mut self, other: Dataset) -> Dataset {
        self.records.extend(other.records);
        self
    }
}

fn check_accuracy(accuracy: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&accuracy) {
        return Err(Error::Usage(format!("accuracy {accuracy} outside [0,1]")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_truth_duplicates_are_rejected() {
        let mut d = Dataset::new();
        d.push_ground_truth(CellGraph::minimal(), 0.9).unwrap();
        assert!(d.push_ground_truth(CellGraph::minimal(), 0.8).is_err());
        // pseudo entries may repeat
        d.push_pseudo(CellGraph::minimal(), 0.7).unwrap();
        assert_eq!(d.len(), 2);
    }

    #[test]
    fn accuracy_range_is_enforced() {
        let mut d = Dataset::new();
        assert!(d.push_ground_truth(CellGraph::minimal(), 1.1).is_err());
        assert!(d.push_pseudo(CellGraph::minimal(), -0.1).is_err());
    }

    #[test]
    fn config_validation_catches_bad_fields() {
        let good = ControllerConfig::default();
        assert!(good.validate().is_ok());
        let mut bad = good.clone();
        bad.predictor_widths = vec![16, 64];
        assert!(bad.validate().is_err());
        let mut bad = good.clone();
        bad.loss_weight_lambda = 1.5;
        assert!(bad.validate().is_err());
        let mut bad = good;
        bad.dropout_rate = 1.0;
        assert!(bad.validate().is_err());
    }
}
