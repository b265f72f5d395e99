//! Training loops: joint supervised fitting, pseudo-labeling, up-sampled
//! semi-supervised retraining.

use crate::controller::{ControllerModel, Dataset, LabelSource};
use crate::error::{Error, Result};
use crate::space::{encode_tokens, CellGraph};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub regression: f64,
    pub reconstruction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub label: String,
    pub epochs: Vec<EpochLoss>,
    pub steps: usize,
    /// True when a max-steps cap ended training before the last epoch.
    pub truncated: bool,
}

impl TrainReport {
    pub fn final_loss(&self) -> Option<EpochLoss> {
        self.epochs.last().copied()
    }
}

/// Output of the three-step semi-supervised fit.
#[derive(Clone, Debug)]
pub struct SemiFitOutcome {
    pub supervised: TrainReport,
    pub semi: TrainReport,
    pub pseudo: Dataset,
}

fn fit_with(
    model: &mut ControllerModel,
    data: &Dataset,
    epochs: usize,
    max_steps: Option<usize>,
    label: &str,
    rng: &mut ChaCha8Rng,
) -> Result<TrainReport> {
    if data.is_empty() {
        return Err(Error::Usage(format!("{label}: empty training set")));
    }
    let space = model.space().clone();
    let seq_ids: Vec<Vec<usize>> = data
        .records()
        .iter()
        .map(|r| encode_tokens(&r.graph, &space).map(|t| t.ids()))
        .collect::<Result<_>>()?;
    let accuracies: Vec<f64> = data.records().iter().map(|r| r.accuracy).collect();
    for (i, a) in accuracies.iter().enumerate() {
        if !(0.0..=1.0).contains(a) {
            return Err(Error::Usage(format!(
                "{label}: record {i} accuracy {a} outside [0,1]"
            )));
        }
    }
    let n = data.len();
    let batch_size = model.config().batch_size;
    let mut report = TrainReport {
        label: label.to_string(),
        epochs: Vec::with_capacity(epochs),
        steps: 0,
        truncated: false,
    };
    'outer: for _epoch in 0..epochs {
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let mut ep_mse = 0.0;
        let mut ep_ce = 0.0;
        let mut seen = 0usize;
        for batch in order.chunks(batch_size) {
            let seqs: Vec<&[usize]> = batch.iter().map(|&i| seq_ids[i].as_slice()).collect();
            let accs: Vec<f64> = batch.iter().map(|&i| accuracies[i]).collect();
            let (mse, ce) = model.train_step(&seqs, &accs, Some(rng))?;
            ep_mse += mse * batch.len() as f64;
            ep_ce += ce * batch.len() as f64;
            seen += batch.len();
            report.steps += 1;
            if let Some(cap) = max_steps {
                if report.steps >= cap {
                    report.truncated = true;
                    report.epochs.push(EpochLoss {
                        regression: ep_mse / seen as f64,
                        reconstruction: ep_ce / seen as f64,
                    });
                    break 'outer;
                }
            }
        }
        report.epochs.push(EpochLoss {
            regression: ep_mse / seen as f64,
            reconstruction: ep_ce / seen as f64,
        });
    }
    model.mark_trained();
    Ok(report)
}

/// Joint supervised training of encoder, predictor and decoder on
/// labeled pairs, for `epochs_supervised` epochs.
pub fn fit_supervised(
    model: &mut ControllerModel,
    data: &Dataset,
    rng: &mut ChaCha8Rng,
) -> Result<TrainReport> {
    let (epochs, cap) = (
        model.config().epochs_supervised,
        model.config().max_steps_supervised,
    );
    fit_with(model, data, epochs, cap, "supervised", rng)
}

/// Predicts accuracies for unlabeled architectures, skipping any whose
/// canonical hash is already ground truth.
pub fn pseudo_label(
    model: &ControllerModel,
    archs: &[CellGraph],
    exclude: &BTreeSet<String>,
) -> Result<Dataset> {
    if !model.is_trained() {
        return Err(Error::Usage(
            "pseudo_label requires a trained model".into(),
        ));
    }
    let space = model.space().clone();
    let mut kept: Vec<(&CellGraph, String)> = Vec::with_capacity(archs.len());
    for g in archs {
        let hash = crate::space::canonical_hash(g);
        if !exclude.contains(&hash) {
            kept.push((g, hash));
        }
    }
    let seqs: Vec<Vec<usize>> = kept
        .iter()
        .map(|(g, _)| encode_tokens(g, &space).map(|t| t.ids()))
        .collect::<Result<_>>()?;
    let embeddings = model.encode_batch(&seqs)?;
    let mut out = Dataset::new();
    for ((g, _), e) in kept.iter().zip(&embeddings) {
        let acc = model.predict_from_embedding(e)?;
        out.push_pseudo((*g).clone(), acc)?;
    }
    Ok(out)
}

/// Duplicates every ground-truth record `ratio` times; pseudo records
/// pass through once. Ordering is deterministic (shuffling happens at
/// batch time).
pub fn upsample(data: &Dataset, ratio: usize) -> Result<Dataset> {
    if ratio == 0 {
        return Err(Error::Usage("upsample ratio must be >= 1".into()));
    }
    let mut out = Dataset::new();
    for r in data.records() {
        let copies = match r.source {
            LabelSource::GroundTruth => ratio,
            LabelSource::Pseudo => 1,
        };
        for _ in 0..copies {
            out.push_raw(r.clone());
        }
    }
    Ok(out)
}

/// The three-step semi-supervised fit: train on labeled pairs, pseudo-
/// label the unlabeled architectures, then retrain on up-sampled labeled
/// data plus the pseudo-labeled set (warm start by default).
pub fn fit_semi_supervised(
    model: &mut ControllerModel,
    labeled: &Dataset,
    unlabeled: &[CellGraph],
    rng: &mut ChaCha8Rng,
) -> Result<SemiFitOutcome> {
    if labeled.is_empty() {
        return Err(Error::Usage(
            "fit_semi_supervised: empty labeled dataset".into(),
        ));
    }
    let supervised = fit_supervised(model, labeled, rng)?;
    let pseudo = pseudo_label(model, unlabeled, &labeled.ground_truth_hashes())?;
    let mixed = upsample(labeled, model.config().upsample_ratio)?.union(pseudo.clone());
    if !model.config().warm_start_semi {
        model.reinit(rng);
    }
    let (epochs, cap) = (model.config().epochs_semi, model.config().max_steps_semi);
    let semi = fit_with(model, &mixed, epochs, cap, "semi_supervised", rng)?;
    Ok(SemiFitOutcome {
        supervised,
        semi,
        pseudo,
    })
}
