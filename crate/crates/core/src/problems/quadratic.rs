use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_theta, Problem};
use crate::error::{OptimError, Result};

/// `f(θ) = ½ Σ dᵢθᵢ²` with curvatures log-spaced in `[1, condition_number]`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    diag: Vec<f64>,
}

impl Quadratic {
    pub fn new(dim: usize, condition_number: f64) -> Result<Self> {
        if dim == 0 {
            return Err(OptimError::config("dim", "quadratic needs dim >= 1"));
        }
        if !(condition_number.is_finite() && condition_number >= 1.0) {
            return Err(OptimError::config(
                "condition_number",
                format!("must be >= 1, got {condition_number}"),
            ));
        }
        let diag = (0..dim)
            .map(|i| {
                if dim == 1 {
                    1.0
                } else {
                    condition_number.powf(i as f64 / (dim - 1) as f64)
                }
            })
            .collect();
        Ok(Self { diag })
    }

    pub fn curvatures(&self) -> &[f64] {
        &self.diag
    }
}

impl Problem for Quadratic {
    fn name(&self) -> &str {
        "quadratic"
    }

    fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Uniform in `[-1, 1]` per coordinate.
    fn initial_point(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.dim()).map(|_| rng.gen_range(-1.0..=1.0)).collect()
    }

    fn loss(&self, theta: &[f64]) -> f64 {
        check_theta(self.dim(), theta);
        0.5 * self
            .diag
            .iter()
            .zip(theta)
            .fold(0.0, |acc, (d, x)| acc + d * x * x)
    }

    fn grad(&self, theta: &[f64]) -> Vec<f64> {
        check_theta(self.dim(), theta);
        self.diag.iter().zip(theta).map(|(d, x)| d * x).collect()
    }

    fn known_optimum(&self) -> Option<f64> {
        Some(0.0)
    }
}
