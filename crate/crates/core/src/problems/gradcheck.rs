//! Central-difference gradient verification.

use super::Problem;
use crate::error::{OptimError, Result};

/// Probe step used by [`validate_problem`].
pub const DEFAULT_STEP: f64 = 1e-5;

/// Gradient scales below this are compared in absolute terms.
const ABS_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradcheckReport {
    /// `max_i |fd_i − g_i| / max(‖g‖∞, ·)`; absolute when `‖g‖∞ < 1e-8`.
    pub max_error: f64,
    /// Coordinate with the largest deviation.
    pub coordinate: usize,
}

/// Compares `problem.grad(theta)` with central differences of step `h`.
///
/// Deviations are measured against the infinity norm of the analytic
/// gradient, so near-zero coordinates of a large gradient do not inflate the
/// error with finite-difference roundoff.
pub fn gradcheck(problem: &dyn Problem, theta: &[f64], h: f64) -> Result<GradcheckReport> {
    if !(h.is_finite() && h > 0.0) {
        return Err(OptimError::config("h", format!("probe step must be > 0, got {h}")));
    }
    if theta.len() != problem.dim() {
        return Err(OptimError::Shape {
            group: 0,
            expected: problem.dim(),
            actual: theta.len(),
        });
    }
    if let Some(index) = theta.iter().position(|x| !x.is_finite()) {
        return Err(OptimError::Numerics {
            what: "gradcheck point",
            group: 0,
            index,
        });
    }

    let analytic = problem.grad(theta);
    let mut probe = theta.to_vec();
    let mut fd = Vec::with_capacity(theta.len());
    for i in 0..theta.len() {
        probe[i] = theta[i] + h;
        let up = problem.loss(&probe);
        probe[i] = theta[i] - h;
        let down = problem.loss(&probe);
        probe[i] = theta[i];
        if !(up.is_finite() && down.is_finite()) {
            return Err(OptimError::Numerics {
                what: "loss during gradcheck",
                group: 0,
                index: i,
            });
        }
        fd.push((up - down) / (2.0 * h));
    }

    let scale = analytic.iter().fold(0.0f64, |acc, g| acc.max(g.abs()));
    let denom = if scale < ABS_FLOOR { 1.0 } else { scale };
    let mut report = GradcheckReport {
        max_error: 0.0,
        coordinate: 0,
    };
    for (i, (a, n)) in analytic.iter().zip(&fd).enumerate() {
        let err = (a - n).abs() / denom;
        if err > report.max_error || err.is_nan() {
            report = GradcheckReport {
                max_error: err,
                coordinate: i,
            };
        }
    }
    Ok(report)
}

/// Gradchecks `problem` at the starting points of seeds `0..points` and
/// returns the worst error, failing if it reaches `tolerance`.
pub fn validate_problem(problem: &dyn Problem, points: u64, tolerance: f64) -> Result<f64> {
    let mut worst = 0.0f64;
    for seed in 0..points {
        let theta = problem.initial_point(seed);
        let report = gradcheck(problem, &theta, DEFAULT_STEP)?;
        if report.max_error.is_nan() || report.max_error >= tolerance {
            return Err(OptimError::Precondition(format!(
                "{} fails gradcheck at seed {seed}: error {:.3e} at coordinate {} (tolerance {tolerance:e})",
                problem.name(),
                report.max_error,
                report.coordinate
            )));
        }
        worst = worst.max(report.max_error);
    }
    Ok(worst)
}
