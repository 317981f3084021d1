//! Parameter groups and the interface shared by every optimizer in the crate.

use serde::{Deserialize, Serialize};

use crate::error::{OptimError, Result};

/// Per-group hyperparameter overrides. `None` falls back to the optimizer config.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GroupOverrides {
    pub alpha: Option<f64>,
    pub weight_decay: Option<f64>,
}

/// A flat vector of trainable parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamGroup {
    pub theta: Vec<f64>,
    pub overrides: GroupOverrides,
}

impl ParamGroup {
    pub fn new(theta: Vec<f64>) -> Self {
        Self {
            theta,
            overrides: GroupOverrides::default(),
        }
    }

    pub fn with_overrides(theta: Vec<f64>, overrides: GroupOverrides) -> Self {
        Self { theta, overrides }
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }
}

/// Common stepping interface used by the benchmark harness.
pub trait Optimizer: Send {
    /// Short identifier, e.g. `"soaa"` or `"adamw"`.
    fn name(&self) -> &'static str;

    /// Applies one update. `loss` is the objective value at the parameters the
    /// gradients were evaluated at; optimizers that do not use it ignore it.
    fn step(&mut self, groups: &mut [ParamGroup], grads: &[&[f64]], loss: Option<f64>)
        -> Result<()>;

    /// Number of updates applied so far.
    fn steps_taken(&self) -> u64;

    /// Current trust-region scale, for optimizers that keep one.
    fn trust_scale(&self) -> Option<f64> {
        None
    }

    /// Serializes the full optimizer state (config included).
    fn checkpoint(&self) -> Vec<u8>;
}

pub(crate) fn validate_overrides(groups: &[ParamGroup]) -> Result<()> {
    for g in groups {
        if let Some(a) = g.overrides.alpha {
            if !(a.is_finite() && a > 0.0) {
                return Err(OptimError::config("alpha", format!("override must be > 0, got {a}")));
            }
        }
        if let Some(wd) = g.overrides.weight_decay {
            if !(wd.is_finite() && wd >= 0.0) {
                return Err(OptimError::config(
                    "weight_decay",
                    format!("override must be >= 0, got {wd}"),
                ));
            }
        }
    }
    Ok(())
}

/// Checks group count, per-group lengths and gradient finiteness.
pub(crate) fn check_step_inputs(
    expected_lens: &[usize],
    groups: &[ParamGroup],
    grads: &[&[f64]],
    loss: Option<f64>,
) -> Result<()> {
    if groups.len() != expected_lens.len() {
        return Err(OptimError::Precondition(format!(
            "optimizer state has {} groups, got {} parameter groups",
            expected_lens.len(),
            groups.len()
        )));
    }
    if grads.len() != expected_lens.len() {
        return Err(OptimError::Precondition(format!(
            "optimizer state has {} groups, got {} gradient vectors",
            expected_lens.len(),
            grads.len()
        )));
    }
    for (gi, ((&n, group), grad)) in expected_lens.iter().zip(groups).zip(grads).enumerate() {
        if group.len() != n {
            return Err(OptimError::Shape {
                group: gi,
                expected: n,
                actual: group.len(),
            });
        }
        if grad.len() != n {
            return Err(OptimError::Shape {
                group: gi,
                expected: n,
                actual: grad.len(),
            });
        }
        if let Some(index) = grad.iter().position(|x| !x.is_finite()) {
            return Err(OptimError::Numerics {
                what: "gradient",
                group: gi,
                index,
            });
        }
    }
    if let Some(l) = loss {
        if !l.is_finite() {
            return Err(OptimError::Numerics {
                what: "loss",
                group: 0,
                index: 0,
            });
        }
    }
    Ok(())
}
