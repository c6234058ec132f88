//! Bias-corrected Adam.

use alloc::format;

#[cfg(feature = "serde")]
use serde::{Deserialize, Serialize};

use crate::encoder::ModelState;
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(Serialize, Deserialize))]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// One Adam update of a single tensor at step `t ≥ 1`.
pub fn adam_update(param: &mut Matrix, m: &mut Matrix, v: &mut Matrix, grad: &Matrix, cfg: &AdamConfig, t: u64) {
    let bc1 = 1.0 - libm::pow(cfg.beta1, t as f64);
    let bc2 = 1.0 - libm::pow(cfg.beta2, t as f64);
    let it = param
        .as_mut_slice()
        .iter_mut()
        .zip(m.as_mut_slice())
        .zip(v.as_mut_slice())
        .zip(grad.as_slice());
    for (((p, m), v), &g) in it {
        *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * g;
        *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * g * g;
        let mh = *m / bc1;
        let vh = *v / bc2;
        *p -= cfg.lr * mh / (libm::sqrt(vh) + cfg.eps);
    }
}

/// Applies one step to every tensor of `state` and advances its step counter.
/// Fails before touching anything if a gradient is non-finite.
pub fn adam_step(state: &mut ModelState, grads: &[Matrix], cfg: &AdamConfig) -> Result<()> {
    if grads.len() != state.params().len() {
        return Err(Error::Shape(format!(
            "{} gradients for {} tensors",
            grads.len(),
            state.params().len()
        )));
    }
    for (i, g) in grads.iter().enumerate() {
        if g.shape() != state.params()[i].shape() {
            return Err(Error::Shape(format!("gradient of `{}` has the wrong shape", state.names[i])));
        }
        if !g.is_finite() {
            return Err(Error::NonFinite(state.names[i].clone()));
        }
    }
    let t = state.step + 1;
    let mut m = core::mem::take(&mut state.adam_m);
    let mut v = core::mem::take(&mut state.adam_v);
    {
        let params = state.params_mut();
        for (i, g) in grads.iter().enumerate() {
            adam_update(&mut params[i], &mut m[i], &mut v[i], g, cfg, t);
        }
    }
    state.adam_m = m;
    state.adam_v = v;
    state.step = t;
    debug_assert!(state.params().iter().all(Matrix::is_finite), "non-finite parameter after Adam step");
    Ok(())
}
