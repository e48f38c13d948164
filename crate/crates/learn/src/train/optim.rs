use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::autodiff::Tensor;

/// Linear warmup from 0 to `setpoint` over `warmup` steps, constant after.
pub fn lr_schedule(step: usize, warmup: usize, setpoint: f64) -> f64 {
    if warmup == 0 || step >= warmup {
        setpoint
    } else {
        setpoint * (step as f64 / warmup as f64)
    }
}

/// Adam with decoupled weight decay and global-norm clipping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamW {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    /// Global gradient norm bound; `0` disables clipping.
    pub clip_norm: f64,
}

impl Default for AdamW {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.1,
            clip_norm: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState {
    pub m: Vec<Tensor>,
    pub v: Vec<Tensor>,
    pub step: u64,
}

impl OptimizerState {
    pub fn new(params: &[Tensor]) -> Self {
        let z: Vec<Tensor> = params.iter().map(|p| Tensor::zeros(&p.shape)).collect();
        Self {
            m: z.clone(),
            v: z,
            step: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepInfo {
    pub grad_norm: f64,
    pub clipped_norm: f64,
}

/// Global L2 norm over the trainable gradients.
pub fn global_norm(grads: &[Tensor], trainable: &[bool]) -> f64 {
    grads
        .iter()
        .zip(trainable)
        .filter(|(_, t)| **t)
        .flat_map(|(g, _)| g.data.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
}

/// Scales the trainable gradients so their global norm is at most `max_norm`.
pub fn clip_global_norm(grads: &mut [Tensor], trainable: &[bool], max_norm: f64) -> (f64, f64) {
    let norm = global_norm(grads, trainable);
    if max_norm > 0.0 && norm > max_norm {
        let s = max_norm / norm;
        for (g, _) in grads.iter_mut().zip(trainable).filter(|(_, t)| **t) {
            g.data.iter_mut().for_each(|v| *v *= s);
        }
        (norm, global_norm(grads, trainable))
    } else {
        (norm, norm)
    }
}

/// One update of the trainable parameters from an averaged gradient: clip,
/// decay `theta -= lr * wd * theta`, then the bias-corrected Adam step.
/// Frozen parameters and their moments are left untouched.
pub fn adam_step(
    opt: &AdamW,
    params: &mut [Tensor],
    names: &[String],
    grads: &mut [Tensor],
    trainable: &[bool],
    state: &mut OptimizerState,
    lr: f64,
) -> Result<StepInfo, TrainError> {
    for ((g, t), name) in grads.iter().zip(trainable).zip(names) {
        if *t && !g.is_finite() {
            return Err(TrainError::NonFinite(format!("gradient of `{name}`")));
        }
    }
    let (grad_norm, clipped_norm) = clip_global_norm(grads, trainable, opt.clip_norm);
    state.step += 1;
    let t = state.step as i32;
    let bc1 = 1.0 - opt.beta1.powi(t);
    let bc2 = 1.0 - opt.beta2.powi(t);
    for k in 0..params.len() {
        if !trainable[k] {
            continue;
        }
        let (p, g) = (&mut params[k].data, &grads[k].data);
        let (m, v) = (&mut state.m[k].data, &mut state.v[k].data);
        for i in 0..p.len() {
            p[i] -= lr * opt.weight_decay * p[i];
            m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g[i];
            v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g[i] * g[i];
            let mh = m[i] / bc1;
            let vh = v[i] / bc2;
            p[i] -= lr * mh / (vh.sqrt() + opt.eps);
        }
    }
    Ok(StepInfo { grad_norm, clipped_norm })
}
