//! Reference Adam and AdamW.
//!
//! Kept deliberately independent of the SOAA code path so the two can be
//! checked against each other on the shared moment machinery.

use serde::{Deserialize, Serialize};

use crate::error::{OptimError, Result};
use crate::optimizer::{check_step_inputs, validate_overrides, Optimizer, ParamGroup};
use crate::soaa::{check_beta, powi_u64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    /// `true` shrinks θ directly (AdamW); `false` adds `λθ` to the gradient.
    pub decoupled: bool,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            alpha: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.0,
            decoupled: false,
        }
    }
}

impl AdamConfig {
    pub fn adamw() -> Self {
        Self {
            weight_decay: 1e-2,
            decoupled: true,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(OptimError::config("alpha", format!("must be > 0, got {}", self.alpha)));
        }
        check_beta("beta1", self.beta1)?;
        check_beta("beta2", self.beta2)?;
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(OptimError::config(
                "epsilon",
                format!("must be > 0, got {}", self.epsilon),
            ));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(OptimError::config(
                "weight_decay",
                format!("must be >= 0, got {}", self.weight_decay),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub(crate) t: u64,
    pub(crate) m: Vec<Vec<f64>>,
    pub(crate) v: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn m(&self, group: usize) -> &[f64] {
        &self.m[group]
    }

    pub fn v(&self, group: usize) -> &[f64] {
        &self.v[group]
    }

    /// Bias-corrected moments of one group at the current step.
    pub fn corrected(&self, group: usize, beta1: f64, beta2: f64) -> (Vec<f64>, Vec<f64>) {
        let c1 = 1.0 - powi_u64(beta1, self.t);
        let c2 = 1.0 - powi_u64(beta2, self.t);
        (
            self.m[group].iter().map(|x| x / c1).collect(),
            self.v[group].iter().map(|x| x / c2).collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    config: AdamConfig,
    state: AdamState,
}

impl Adam {
    pub fn new(config: AdamConfig, groups: &[ParamGroup]) -> Result<Self> {
        config.validate()?;
        validate_overrides(groups)?;
        if groups.is_empty() {
            return Err(OptimError::Precondition("no parameter groups".into()));
        }
        if let Some(gi) = groups.iter().position(ParamGroup::is_empty) {
            return Err(OptimError::Shape {
                group: gi,
                expected: 1,
                actual: 0,
            });
        }
        let state = AdamState {
            t: 0,
            m: groups.iter().map(|g| vec![0.0; g.len()]).collect(),
            v: groups.iter().map(|g| vec![0.0; g.len()]).collect(),
        };
        Ok(Self { config, state })
    }

    pub(crate) fn from_parts(config: AdamConfig, state: AdamState) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, state })
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    pub fn state(&self) -> &AdamState {
        &self.state
    }

    pub fn adam_step(&mut self, groups: &mut [ParamGroup], grads: &[&[f64]]) -> Result<()> {
        let lens: Vec<usize> = self.state.m.iter().map(Vec::len).collect();
        check_step_inputs(&lens, groups, grads, None)?;
        validate_overrides(groups)?;

        let AdamConfig {
            alpha,
            beta1,
            beta2,
            epsilon,
            weight_decay,
            decoupled,
        } = self.config;
        self.state.t += 1;
        let c1 = 1.0 - powi_u64(beta1, self.state.t);
        let c2 = 1.0 - powi_u64(beta2, self.state.t);

        for (gi, group) in groups.iter_mut().enumerate() {
            let lr = group.overrides.alpha.unwrap_or(alpha);
            let wd = group.overrides.weight_decay.unwrap_or(weight_decay);
            let m = &mut self.state.m[gi];
            let v = &mut self.state.v[gi];
            for (i, th) in group.theta.iter_mut().enumerate() {
                let mut g = grads[gi][i];
                if wd != 0.0 {
                    if decoupled {
                        *th -= lr * wd * *th;
                    } else {
                        g += wd * *th;
                    }
                }
                m[i] = beta1 * m[i] + (1.0 - beta1) * g;
                v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                *th -= lr * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}

impl Optimizer for Adam {
    fn name(&self) -> &'static str {
        if self.config.decoupled {
            "adamw"
        } else {
            "adam"
        }
    }

    fn step(
        &mut self,
        groups: &mut [ParamGroup],
        grads: &[&[f64]],
        _loss: Option<f64>,
    ) -> Result<()> {
        self.adam_step(groups, grads)
    }

    fn steps_taken(&self) -> u64 {
        self.state.t
    }

    fn checkpoint(&self) -> Vec<u8> {
        crate::checkpoint::encode_adam(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step() {
        let mut groups = vec![ParamGroup::new(vec![0.0])];
        let mut opt = Adam::new(AdamConfig::default(), &groups).unwrap();
        opt.adam_step(&mut groups, &[&[1.0]]).unwrap();
        let expected = -1e-3 * (1.0 / (1.0 + 1e-8));
        assert!((groups[0].theta[0] - expected).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_is_fixed_point() {
        let mut groups = vec![ParamGroup::new(vec![0.7, -0.2])];
        let mut opt = Adam::new(AdamConfig::default(), &groups).unwrap();
        for _ in 0..10 {
            opt.adam_step(&mut groups, &[&[0.0, 0.0]]).unwrap();
        }
        assert_eq!(groups[0].theta, vec![0.7, -0.2]);
    }

    #[test]
    fn decoupled_decay_only() {
        let cfg = AdamConfig {
            alpha: 0.1,
            weight_decay: 0.01,
            decoupled: true,
            ..Default::default()
        };
        let mut groups = vec![ParamGroup::new(vec![1.0])];
        let mut opt = Adam::new(cfg, &groups).unwrap();
        opt.adam_step(&mut groups, &[&[0.0]]).unwrap();
        assert!((groups[0].theta[0] - 0.999).abs() < 1e-15);
        assert_eq!(opt.name(), "adamw");
    }

    #[test]
    fn coupled_decay_enters_moments() {
        let cfg = AdamConfig {
            weight_decay: 0.5,
            ..Default::default()
        };
        let mut groups = vec![ParamGroup::new(vec![2.0])];
        let mut opt = Adam::new(cfg, &groups).unwrap();
        opt.adam_step(&mut groups, &[&[0.0]]).unwrap();
        // effective gradient 0.5 * 2 = 1
        assert!((opt.state().m(0)[0] - 0.1).abs() < 1e-15);
        assert!(groups[0].theta[0] < 2.0);
        assert_eq!(opt.name(), "adam");
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(Adam::new(
            AdamConfig {
                beta1: 1.0,
                ..Default::default()
            },
            &[ParamGroup::new(vec![0.0])]
        )
        .is_err());
        let mut groups = vec![ParamGroup::new(vec![0.0])];
        let mut opt = Adam::new(AdamConfig::default(), &groups).unwrap();
        assert!(matches!(
            opt.adam_step(&mut groups, &[&[f64::NAN]]),
            Err(OptimError::Numerics { .. })
        ));
        assert_eq!(opt.state().t(), 0);
    }
}
