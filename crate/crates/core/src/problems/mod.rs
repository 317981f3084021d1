//! Differentiable test objectives with analytic gradients.

mod gradcheck;
mod logistic;
mod mlp;
mod quadratic;
mod rosenbrock;

use serde::{Deserialize, Serialize};

use crate::error::{OptimError, Result};

pub use gradcheck::{gradcheck, validate_problem, GradcheckReport, DEFAULT_STEP};
pub use logistic::LogisticRegression;
pub use mlp::TinyMlp;
pub use quadratic::Quadratic;
pub use rosenbrock::Rosenbrock;

/// A smooth objective over a flat parameter vector.
///
/// Implementations are immutable after construction and may be shared
/// between threads.
pub trait Problem: Send + Sync {
    fn name(&self) -> &str;

    /// Number of parameters.
    fn dim(&self) -> usize;

    /// Deterministic starting point for a run seed.
    fn initial_point(&self, seed: u64) -> Vec<f64>;

    fn loss(&self, theta: &[f64]) -> f64;

    fn grad(&self, theta: &[f64]) -> Vec<f64>;

    fn loss_and_grad(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        (self.loss(theta), self.grad(theta))
    }

    /// Minimal loss value, when known in closed form.
    fn known_optimum(&self) -> Option<f64> {
        None
    }
}

/// Size and seed knobs accepted by the registry. Unset fields take the
/// per-problem defaults listed in [`build`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemParams {
    /// Problem dimension: parameters for `quadratic`/`rosenbrock`, features for
    /// `logistic_regression`, inputs for `tiny_mlp`.
    pub dim: Option<usize>,
    pub condition_number: Option<f64>,
    pub n_samples: Option<usize>,
    pub hidden: Option<usize>,
    /// Seed of the synthetic dataset (not of the starting point).
    pub data_seed: Option<u64>,
}

pub const PROBLEM_NAMES: [&str; 4] = ["quadratic", "rosenbrock", "logistic_regression", "tiny_mlp"];

/// Builds a registered problem by name.
///
/// Defaults: `quadratic` dim 10, condition number 10; `rosenbrock` dim 2;
/// `logistic_regression` 200 samples, 5 features; `tiny_mlp` 64 samples,
/// 3 inputs, 8 hidden units. Data seeds default to 0.
pub fn build(name: &str, params: &ProblemParams) -> Result<Box<dyn Problem>> {
    let seed = params.data_seed.unwrap_or(0);
    Ok(match name {
        "quadratic" => Box::new(Quadratic::new(
            params.dim.unwrap_or(10),
            params.condition_number.unwrap_or(10.0),
        )?),
        "rosenbrock" => Box::new(Rosenbrock::new(params.dim.unwrap_or(2))?),
        "logistic_regression" => Box::new(LogisticRegression::new(
            params.n_samples.unwrap_or(200),
            params.dim.unwrap_or(5),
            seed,
        )?),
        "tiny_mlp" => Box::new(TinyMlp::new(
            params.n_samples.unwrap_or(64),
            params.dim.unwrap_or(3),
            params.hidden.unwrap_or(8),
            seed,
        )?),
        other => {
            return Err(OptimError::config(
                "problem",
                format!("unknown problem {other:?}; known: {}", PROBLEM_NAMES.join(", ")),
            ))
        }
    })
}

pub(crate) fn check_theta(dim: usize, theta: &[f64]) {
    assert_eq!(theta.len(), dim, "parameter vector has wrong length");
}
