//! AdamW with decoupled weight decay, and a linear-warmup / cosine-to-zero
//! learning-rate schedule.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::tinylm::{ModelGradients, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleConfig {
    pub peak_lr: f64,
    pub total_steps: usize,
    pub warmup_frac: f64,
}

impl ScheduleConfig {
    pub fn new(peak_lr: f64, total_steps: usize, warmup_frac: f64) -> Result<Self> {
        let cfg = Self { peak_lr, total_steps, warmup_frac };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.peak_lr.is_finite() && self.peak_lr >= 0.0) {
            return Err(Error::invalid(format!("peak lr must be finite and >= 0, got {}", self.peak_lr)));
        }
        if self.total_steps == 0 {
            return Err(Error::invalid("total_steps must be >= 1"));
        }
        if !(0.0..1.0).contains(&self.warmup_frac) {
            return Err(Error::invalid(format!("warmup_frac must lie in [0, 1), got {}", self.warmup_frac)));
        }
        if self.warmup_steps() >= self.total_steps {
            return Err(Error::invalid(format!(
                "warmup of {} steps leaves no decay phase in {} total steps",
                self.warmup_steps(),
                self.total_steps
            )));
        }
        Ok(())
    }

    pub fn warmup_steps(&self) -> usize {
        (self.warmup_frac * self.total_steps as f64).round() as usize
    }
}

/// Learning rate for 0-based `step`.
///
/// Warmup ramps linearly and reaches `peak_lr` on its last step; the cosine
/// phase starts at `peak_lr` and decays toward zero at `total_steps`.
pub fn lr_at_step(cfg: &ScheduleConfig, step: usize) -> Result<f64> {
    cfg.validate()?;
    if step >= cfg.total_steps {
        return Err(Error::invalid(format!("step {step} outside schedule of {} steps", cfg.total_steps)));
    }
    let warmup = cfg.warmup_steps();
    if step < warmup {
        return Ok(cfg.peak_lr * ((step + 1) as f64 / warmup as f64));
    }
    let progress = (step - warmup) as f64 / (cfg.total_steps - warmup) as f64;
    Ok(cfg.peak_lr * 0.5 * (1.0 + (PI * progress).cos()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        Self { beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.01 }
    }
}

impl AdamWConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, b) in [("adam_beta1", self.beta1), ("adam_beta2", self.beta2)] {
            if !(0.0..1.0).contains(&b) {
                return Err(Error::invalid(format!("{name} must lie in [0, 1), got {b}")));
            }
        }
        if !(self.eps.is_finite() && self.eps > 0.0) {
            return Err(Error::invalid(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(Error::invalid(format!("weight decay must be >= 0, got {}", self.weight_decay)));
        }
        Ok(())
    }
}

/// Moment buffers and step counter for one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamWState {
    pub config: AdamWConfig,
    pub step: u64,
    pub first_moment: ModelGradients,
    pub second_moment: ModelGradients,
}

impl AdamWState {
    pub fn new(params: &ModelParams, config: AdamWConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            step: 0,
            first_moment: ModelGradients::zeros_like(params),
            second_moment: ModelGradients::zeros_like(params),
        })
    }
}

/// One in-place AdamW update of `params`.
pub fn adamw_step(params: &mut ModelParams, grads: &ModelGradients, state: &mut AdamWState, lr: f64) -> Result<()> {
    if !(grads.matches(params) && state.first_moment.matches(params) && state.second_moment.matches(params)) {
        return Err(Error::invalid("optimizer, gradient and parameter shapes differ"));
    }
    if !(lr.is_finite() && lr >= 0.0) {
        return Err(Error::invalid(format!("learning rate must be finite and >= 0, got {lr}")));
    }
    state.step += 1;
    let t = state.step;
    let cfg = state.config;
    let m = state.first_moment.slices_mut();
    let v = state.second_moment.slices_mut();
    for (((p, g), m), v) in params.slices_mut().into_iter().zip(grads.slices()).zip(m).zip(v) {
        adamw_update(p, g, m, v, t, &cfg, lr);
    }
    Ok(())
}

/// Slice-level AdamW update at (already incremented) step `t`.
pub fn adamw_update(
    params: &mut [f64],
    grads: &[f64],
    m: &mut [f64],
    v: &mut [f64],
    t: u64,
    cfg: &AdamWConfig,
    lr: f64,
) {
    debug_assert!(t >= 1);
    let bc1 = 1.0 - cfg.beta1.powi(t as i32);
    let bc2 = 1.0 - cfg.beta2.powi(t as i32);
    for i in 0..params.len() {
        let g = grads[i];
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        let theta = params[i];
        params[i] = theta - lr * (m_hat / (v_hat.sqrt() + cfg.eps) + cfg.weight_decay * theta);
    }
}
