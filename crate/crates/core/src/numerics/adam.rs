use serde::{Deserialize, Serialize};

use super::param::Param;
use crate::error::{Error, Result};

/// Adam hyperparameters. Defaults follow the original reference values.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config(format!(
                "adam lr must be positive, got {}",
                self.lr
            )));
        }
        if !(self.beta1 > 0.0 && self.beta1 < 1.0) {
            return Err(Error::Config(format!(
                "adam beta1 must lie in (0,1), got {}",
                self.beta1
            )));
        }
        if !(self.beta2 > 0.0 && self.beta2 < 1.0) {
            return Err(Error::Config(format!(
                "adam beta2 must lie in (0,1), got {}",
                self.beta2
            )));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::Config(format!(
                "adam eps must be positive, got {}",
                self.eps
            )));
        }
        Ok(())
    }
}

/// One bias-corrected Adam update, applied in place to every parameter.
///
/// Gradients are left untouched; the caller clears them between steps.
pub fn adam_step(params: &mut [&mut Param], cfg: &AdamConfig) -> Result<()> {
    cfg.validate()?;
    for p in params.iter_mut() {
        if let Some(bad) = p.grad_slice().iter().position(|g| !g.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite gradient in parameter '{}' at flat index {bad}",
                p.name()
            )));
        }
        p.step_count += 1;
        let t = p.step_count as i32;
        let bc1 = 1.0 - cfg.beta1.powi(t);
        let bc2 = 1.0 - cfg.beta2.powi(t);
        let grad = p.grad.as_slice().expect("grad not contiguous");
        let m = p.m.as_slice_mut().expect("m not contiguous");
        let v = p.v.as_slice_mut().expect("v not contiguous");
        let values = p.values.as_slice_mut().expect("values not contiguous");
        for i in 0..values.len() {
            let g = grad[i];
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            values[i] -= cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(value: f64, grad: f64) -> Param {
        let mut p = Param::zeros("p", &[1]);
        p.values_slice_mut()[0] = value;
        p.grad_slice_mut()[0] = grad;
        p
    }

    #[test]
    fn first_step_moves_by_lr() {
        // Bias correction makes the very first step -lr * g / (|g| + eps).
        let mut p = one(0.0, 2.0);
        adam_step(&mut [&mut p], &AdamConfig::default()).unwrap();
        let expected = -1e-3 * 2.0 / (2.0 + 1e-8);
        assert!((p.values_slice()[0] - expected).abs() < 1e-12);
        assert!((p.values_slice()[0] + 1e-3).abs() < 1e-6);
        assert_eq!(p.step_count(), 1);
        // Grads are the caller's to clear.
        assert_eq!(p.grad_slice()[0], 2.0);
    }

    #[test]
    fn zero_gradient_is_identity() {
        let mut p = one(1.5, 0.0);
        for _ in 0..25 {
            adam_step(&mut [&mut p], &AdamConfig::default()).unwrap();
        }
        assert_eq!(p.values_slice()[0], 1.5);
    }

    #[test]
    fn constant_positive_gradient_decreases_monotonically() {
        let mut p = one(0.3, 0.7);
        let mut prev = 0.3;
        for _ in 0..10 {
            p.grad_slice_mut()[0] = 0.7;
            adam_step(&mut [&mut p], &AdamConfig::default()).unwrap();
            let cur = p.values_slice()[0];
            assert!(cur < prev, "{cur} !< {prev}");
            prev = cur;
        }
    }

    #[test]
    fn non_finite_gradient_names_the_parameter() {
        let mut good = one(0.0, 1.0);
        let mut bad = Param::zeros("w_if", &[2]);
        bad.grad_slice_mut()[1] = f64::NAN;
        let err = adam_step(&mut [&mut good, &mut bad], &AdamConfig::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("w_if"), "{msg}");
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        let mut p = one(0.0, 1.0);
        let cfg = AdamConfig {
            beta1: 1.0,
            ..AdamConfig::default()
        };
        assert!(adam_step(&mut [&mut p], &cfg).is_err());
        let cfg = AdamConfig {
            lr: -1.0,
            ..AdamConfig::default()
        };
        assert!(adam_step(&mut [&mut p], &cfg).is_err());
    }
}
