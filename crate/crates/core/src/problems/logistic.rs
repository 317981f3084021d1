use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{check_theta, Problem};
use crate::error::{OptimError, Result};

/// Class-mean offset along the separating direction.
const SEPARATION: f64 = 1.0;

/// Binary logistic regression on two overlapping Gaussian classes.
///
/// Parameters are the `dim` weights followed by the bias. The loss is the mean
/// cross-entropy `mean(log(1 + exp(-z·(w·x + b))))` with labels `z = ±1`.
#[derive(Debug, Clone)]
pub struct LogisticRegression {
    features: Vec<Vec<f64>>,
    labels: Vec<f64>,
}

impl LogisticRegression {
    pub fn new(n_samples: usize, dim: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(OptimError::config("dim", "logistic regression needs dim >= 1"));
        }
        if n_samples < 2 * dim {
            return Err(OptimError::config(
                "n_samples",
                format!("need at least 2·dim = {} samples, got {n_samples}", 2 * dim),
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut dir: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        dir.iter_mut().for_each(|x| *x /= norm);

        let mut features = Vec::with_capacity(n_samples);
        let mut labels = Vec::with_capacity(n_samples);
        for k in 0..n_samples {
            let z = if k % 2 == 0 { 1.0 } else { -1.0 };
            let x = dir
                .iter()
                .map(|d| z * SEPARATION * d + rng.sample::<f64, _>(StandardNormal))
                .collect();
            features.push(x);
            labels.push(z);
        }
        Ok(Self { features, labels })
    }

    pub fn samples(&self) -> (&[Vec<f64>], &[f64]) {
        (&self.features, &self.labels)
    }

    fn margin(&self, theta: &[f64], x: &[f64]) -> f64 {
        let (w, b) = theta.split_at(x.len());
        w.iter().zip(x).fold(b[0], |acc, (wi, xi)| acc + wi * xi)
    }
}

fn softplus(u: f64) -> f64 {
    u.max(0.0) + (-u.abs()).exp().ln_1p()
}

fn sigmoid(u: f64) -> f64 {
    if u >= 0.0 {
        1.0 / (1.0 + (-u).exp())
    } else {
        let e = u.exp();
        e / (1.0 + e)
    }
}

impl Problem for LogisticRegression {
    fn name(&self) -> &str {
        "logistic_regression"
    }

    fn dim(&self) -> usize {
        self.features[0].len() + 1
    }

    fn initial_point(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..self.dim()).map(|_| rng.gen_range(-0.5..=0.5)).collect()
    }

    fn loss(&self, theta: &[f64]) -> f64 {
        check_theta(self.dim(), theta);
        let total = self
            .features
            .iter()
            .zip(&self.labels)
            .fold(0.0, |acc, (x, z)| acc + softplus(-z * self.margin(theta, x)));
        total / self.labels.len() as f64
    }

    fn grad(&self, theta: &[f64]) -> Vec<f64> {
        check_theta(self.dim(), theta);
        let d = self.dim();
        let mut g = vec![0.0; d];
        for (x, z) in self.features.iter().zip(&self.labels) {
            let coef = -z * sigmoid(-z * self.margin(theta, x));
            for (gi, xi) in g.iter_mut().zip(x) {
                *gi += coef * xi;
            }
            g[d - 1] += coef;
        }
        let n = self.labels.len() as f64;
        g.iter_mut().for_each(|x| *x /= n);
        g
    }
}
