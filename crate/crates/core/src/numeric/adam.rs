use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::matrix::Matrix;
use crate::numeric::params::ParamSet;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self { learning_rate, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && (0.0..1.0).contains(&self.beta1)
            && (0.0..1.0).contains(&self.beta2)
            && self.epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid Adam hyperparameters {self:?}")))
        }
    }
}

/// Moment accumulators for one [`ParamSet`].
#[derive(Clone, Debug)]
pub struct AdamState {
    pub config: AdamConfig,
    first: Vec<Matrix>,
    second: Vec<Matrix>,
    step: u64,
}

impl AdamState {
    pub fn new(params: &ParamSet, config: AdamConfig) -> Result<Self> {
        config.validate()?;
        let zeros = || params.iter().map(|p| Matrix::zeros(p.value.rows(), p.value.cols())).collect();
        Ok(Self { config, first: zeros(), second: zeros(), step: 0 })
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One bias-corrected Adam update followed by projection of every
/// non-negative-flagged parameter onto `[0, inf)`.
pub fn adam_step(params: &mut ParamSet, grads: &ParamSet, state: &mut AdamState) -> Result<()> {
    params.check_compatible(grads)?;
    if state.first.len() != params.len() {
        return Err(Error::Shape(format!(
            "optimizer state tracks {} parameters, model has {}",
            state.first.len(),
            params.len()
        )));
    }
    for (p, g) in params.iter().zip(grads.iter()) {
        if let Err(Error::NonFinite(msg)) = g.value.ensure_finite(&p.name) {
            return Err(Error::NonFinite(format!("gradient of {msg}")));
        }
    }

    state.step += 1;
    let AdamConfig { learning_rate, beta1, beta2, epsilon } = state.config;
    let t = state.step as i32;
    let bc1 = 1.0 - beta1.powi(t);
    let bc2 = 1.0 - beta2.powi(t);

    for (i, (p, g)) in params.iter_mut().zip(grads.iter()).enumerate() {
        let m = state.first[i].data_mut();
        let v = state.second[i].data_mut();
        let w = p.value.data_mut();
        for j in 0..w.len() {
            let gj = g.value.data()[j];
            m[j] = beta1 * m[j] + (1.0 - beta1) * gj;
            v[j] = beta2 * v[j] + (1.0 - beta2) * gj * gj;
            let m_hat = m[j] / bc1;
            let v_hat = v[j] / bc2;
            w[j] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            if p.nonneg && w[j] < 0.0 {
                w[j] = 0.0;
            }
        }
        p.value.ensure_finite(&p.name)?;
    }
    Ok(())
}
