use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{check_theta, Problem};
use crate::error::{OptimError, Result};

/// One-hidden-layer tanh regression network with mean squared error.
///
/// Flattened parameter layout: `W1` (`hidden × in_dim`, row-major), `b1`
/// (`hidden`), `w2` (`hidden`), `b2` (1). The default dataset draws inputs
/// uniformly from `[-1, 1]` and targets `sin(a·x)` for a seeded vector `a`.
#[derive(Debug, Clone)]
pub struct TinyMlp {
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    in_dim: usize,
    hidden: usize,
}

impl TinyMlp {
    pub fn new(n_samples: usize, in_dim: usize, hidden: usize, seed: u64) -> Result<Self> {
        check_sizes(n_samples, in_dim, hidden)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a: Vec<f64> = (0..in_dim).map(|_| rng.sample(StandardNormal)).collect();
        let mut inputs = Vec::with_capacity(n_samples);
        let mut targets = Vec::with_capacity(n_samples);
        for _ in 0..n_samples {
            let x: Vec<f64> = (0..in_dim).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            targets.push(a.iter().zip(&x).map(|(ai, xi)| ai * xi).sum::<f64>().sin());
            inputs.push(x);
        }
        Ok(Self {
            inputs,
            targets,
            in_dim,
            hidden,
        })
    }

    /// Network over a caller-supplied dataset.
    pub fn from_data(inputs: Vec<Vec<f64>>, targets: Vec<f64>, hidden: usize) -> Result<Self> {
        let in_dim = inputs.first().map_or(0, Vec::len);
        check_sizes(inputs.len(), in_dim, hidden)?;
        if targets.len() != inputs.len() || inputs.iter().any(|x| x.len() != in_dim) {
            return Err(OptimError::config("n_samples", "ragged inputs or target count mismatch"));
        }
        Ok(Self {
            inputs,
            targets,
            in_dim,
            hidden,
        })
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    /// Splits θ into `(W1, b1, w2, b2)`.
    pub fn unpack<'a>(&self, theta: &'a [f64]) -> (&'a [f64], &'a [f64], &'a [f64], f64) {
        let (w1, rest) = theta.split_at(self.hidden * self.in_dim);
        let (b1, rest) = rest.split_at(self.hidden);
        let (w2, rest) = rest.split_at(self.hidden);
        (w1, b1, w2, rest[0])
    }

    fn forward(&self, theta: &[f64], x: &[f64], act: &mut [f64]) -> f64 {
        let (w1, b1, w2, b2) = self.unpack(theta);
        let mut out = b2;
        for j in 0..self.hidden {
            let row = &w1[j * self.in_dim..(j + 1) * self.in_dim];
            let pre = row.iter().zip(x).fold(b1[j], |acc, (w, xi)| acc + w * xi);
            act[j] = pre.tanh();
            out += w2[j] * act[j];
        }
        out
    }
}

fn check_sizes(n_samples: usize, in_dim: usize, hidden: usize) -> Result<()> {
    if n_samples == 0 {
        return Err(OptimError::config("n_samples", "must be >= 1"));
    }
    if in_dim == 0 {
        return Err(OptimError::config("dim", "input dimension must be >= 1"));
    }
    if hidden == 0 {
        return Err(OptimError::config("hidden", "must be >= 1"));
    }
    Ok(())
}

impl Problem for TinyMlp {
    fn name(&self) -> &str {
        "tiny_mlp"
    }

    fn dim(&self) -> usize {
        self.hidden * self.in_dim + 2 * self.hidden + 1
    }

    fn initial_point(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s1 = 1.0 / (self.in_dim as f64).sqrt();
        let s2 = 1.0 / (self.hidden as f64).sqrt();
        let mut theta = Vec::with_capacity(self.dim());
        theta.extend((0..self.hidden * self.in_dim).map(|_| rng.gen_range(-s1..=s1)));
        theta.extend((0..self.hidden).map(|_| rng.gen_range(-0.1..=0.1)));
        theta.extend((0..self.hidden).map(|_| rng.gen_range(-s2..=s2)));
        theta.push(0.0);
        theta
    }

    fn loss(&self, theta: &[f64]) -> f64 {
        check_theta(self.dim(), theta);
        let mut act = vec![0.0; self.hidden];
        let total = self
            .inputs
            .iter()
            .zip(&self.targets)
            .fold(0.0, |acc, (x, y)| {
                let r = self.forward(theta, x, &mut act) - y;
                acc + r * r
            });
        total / self.targets.len() as f64
    }

    fn grad(&self, theta: &[f64]) -> Vec<f64> {
        self.loss_and_grad(theta).1
    }

    fn loss_and_grad(&self, theta: &[f64]) -> (f64, Vec<f64>) {
        check_theta(self.dim(), theta);
        let (h, d) = (self.hidden, self.in_dim);
        let (_, _, w2, _) = self.unpack(theta);
        let n = self.targets.len() as f64;
        let mut grad = vec![0.0; self.dim()];
        let mut act = vec![0.0; h];
        let mut total = 0.0;
        for (x, y) in self.inputs.iter().zip(&self.targets) {
            let r = self.forward(theta, x, &mut act) - y;
            total += r * r;
            let dout = 2.0 * r / n;
            let (gw1, rest) = grad.split_at_mut(h * d);
            let (gb1, rest) = rest.split_at_mut(h);
            let (gw2, gb2) = rest.split_at_mut(h);
            gb2[0] += dout;
            for j in 0..h {
                gw2[j] += dout * act[j];
                let dpre = dout * w2[j] * (1.0 - act[j] * act[j]);
                gb1[j] += dpre;
                for (g, xi) in gw1[j * d..(j + 1) * d].iter_mut().zip(x) {
                    *g += dpre * xi;
                }
            }
        }
        (total / n, grad)
    }
}
