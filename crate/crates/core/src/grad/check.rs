//! Central finite-difference gradient checker.
//!
//! Every gradient the search relies on is validated against this: the
//! closure must run a full forward/backward (zeroing grads first) and
//! return the scalar loss; the checker then perturbs each parameter
//! entry by ±step and compares slopes.

use crate::error::{Error, Result};
use crate::grad::tensor::Parameterized;

pub const DEFAULT_FD_STEP: f64 = 1e-4;

/// Returns max over parameter entries of
/// |analytic - numeric| / max(1, |analytic| + |numeric|).
pub fn backward_check<M, F>(model: &mut M, mut f: F, step: f64) -> Result<f64>
where
    M: Parameterized,
    F: FnMut(&mut M) -> Result<f64>,
{
    let base = f(model)?;
    if !base.is_finite() {
        return Err(Error::NonFinite("loss in backward_check".into()));
    }
    let analytic: Vec<Vec<f64>> = model
        .named_params_mut()
        .iter()
        .map(|(_, t)| t.grad().to_vec())
        .collect();

    let n_tensors = analytic.len();
    let mut max_rel = 0.0_f64;
    for p in 0..n_tensors {
        let entries = analytic[p].len();
        for k in 0..entries {
            let orig = {
                let mut params = model.named_params_mut();
                let v = params[p].1.values()[k];
                params[p].1.values_mut()[k] = v + step;
                v
            };
            let plus = f(model)?;
            {
                let mut params = model.named_params_mut();
                params[p].1.values_mut()[k] = orig - step;
            }
            let minus = f(model)?;
            {
                let mut params = model.named_params_mut();
                params[p].1.values_mut()[k] = orig;
            }
            if !plus.is_finite() || !minus.is_finite() {
                return Err(Error::NonFinite("perturbed loss in backward_check".into()));
            }
            let numeric = (plus - minus) / (2.0 * step);
            let a = analytic[p][k];
            let rel = (a - numeric).abs() / 1.0_f64.max(a.abs() + numeric.abs());
            if rel > max_rel {
                max_rel = rel;
            }
        }
    }
    // restore gradients to the analytic state for the unperturbed point
    f(model)?;
    Ok(max_rel)
}
