//! Gradient ascent in the learned embedding space.

use crate::controller::ControllerModel;
use crate::error::{Error, Result};

const MAX_HALVINGS: usize = 10;

#[derive(Clone, Debug)]
pub struct AscentStep {
    pub embedding: Vec<f64>,
    /// Set when even the smallest step failed to improve the prediction
    /// and the input embedding was returned unchanged.
    pub flagged: bool,
    pub halvings: usize,
}

/// Moves an embedding along the predictor's gradient:
/// e' = e + eta * d predict / d e, with backtracking halving of eta until
/// predict(e') >= predict(e) (at most 10 halvings, then flag and return
/// the input unchanged).
pub fn gradient_ascent_step(
    model: &ControllerModel,
    e: &[f64],
    eta: f64,
) -> Result<AscentStep> {
    if eta < 0.0 {
        return Err(Error::Usage(format!("step size {eta} must be >= 0")));
    }
    let (p0, grad) = model.embedding_gradient(e)?;
    if eta == 0.0 {
        return Ok(AscentStep {
            embedding: e.to_vec(),
            flagged: false,
            halvings: 0,
        });
    }
    let mut step = eta;
    for halvings in 0..=MAX_HALVINGS {
        let candidate: Vec<f64> = e.iter().zip(&grad).map(|(v, g)| v + step * g).collect();
        let p = model.predict_from_embedding(&candidate)?;
        if p >= p0 {
            return Ok(AscentStep {
                embedding: candidate,
                flagged: false,
                halvings,
            });
        }
        step /= 2.0;
    }
    Ok(AscentStep {
        embedding: e.to_vec(),
        flagged: true,
        halvings: MAX_HALVINGS,
    })
}
