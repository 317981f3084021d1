use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_theta, Problem};
use crate::error::{OptimError, Result};

/// Pairwise Rosenbrock: `Σᵢ 100(θ₂ᵢ₊₁ − θ₂ᵢ²)² + (1 − θ₂ᵢ)²`, minimum 0 at all-ones.
#[derive(Debug, Clone)]
pub struct Rosenbrock {
    dim: usize,
}

impl Rosenbrock {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 || !dim.is_multiple_of(2) {
            return Err(OptimError::config(
                "dim",
                format!("rosenbrock needs an even dim >= 2, got {dim}"),
            ));
        }
        Ok(Self { dim })
    }
}

impl Problem for Rosenbrock {
    fn name(&self) -> &str {
        "rosenbrock"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    /// The classic `(-1.2, 1)` start per pair, jittered by up to ±0.2.
    fn initial_point(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.dim)
            .map(|i| {
                let base = if i % 2 == 0 { -1.2 } else { 1.0 };
                base + rng.gen_range(-0.2..=0.2)
            })
            .collect()
    }

    fn loss(&self, theta: &[f64]) -> f64 {
        check_theta(self.dim, theta);
        theta.chunks_exact(2).fold(0.0, |acc, p| {
            let (x, y) = (p[0], p[1]);
            acc + 100.0 * (y - x * x).powi(2) + (1.0 - x).powi(2)
        })
    }

    fn grad(&self, theta: &[f64]) -> Vec<f64> {
        check_theta(self.dim, theta);
        let mut g = vec![0.0; self.dim];
        for (p, gp) in theta.chunks_exact(2).zip(g.chunks_exact_mut(2)) {
            let (x, y) = (p[0], p[1]);
            let r = y - x * x;
            gp[0] = -400.0 * x * r - 2.0 * (1.0 - x);
            gp[1] = 200.0 * r;
        }
        g
    }

    fn known_optimum(&self) -> Option<f64> {
        Some(0.0)
    }
}
