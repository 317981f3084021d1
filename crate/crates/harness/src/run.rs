use std::time::Instant;

use serde::{Deserialize, Serialize};
use soaa::problems::Problem;
use soaa::ParamGroup;

use crate::error::Result;
use crate::spec::RunSpec;

/// One checkpoint of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub step: u64,
    pub loss: f64,
    /// Trust-region scale after `step` updates; `None` for baselines.
    pub dt: Option<f64>,
    pub grad_norm: f64,
    /// Cumulative wall time since the run started.
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub optimizer: String,
    pub problem: String,
    pub seed: u64,
    pub rows: Vec<RunRow>,
    /// Loss or gradient became non-finite; the last row is where it happened.
    pub diverged: bool,
}

impl RunRecord {
    pub fn final_loss(&self) -> Option<f64> {
        self.rows.last().map(|r| r.loss)
    }

    /// Same trajectory apart from wall-clock timings.
    pub fn same_trajectory(&self, other: &RunRecord) -> bool {
        let key = |r: &RunRow| (r.step, r.loss.to_bits(), r.dt.map(f64::to_bits), r.grad_norm.to_bits());
        self.optimizer == other.optimizer
            && self.problem == other.problem
            && self.seed == other.seed
            && self.diverged == other.diverged
            && self.rows.iter().map(key).eq(other.rows.iter().map(key))
    }
}

/// Builds and gradchecks the spec's problem, then runs one seed.
pub fn run_single(spec: &RunSpec, seed: u64) -> Result<RunRecord> {
    spec.validate()?;
    let problem = spec.problem.build_validated()?;
    run_on(problem.as_ref(), spec, seed)
}

/// Training loop on an already-built problem.
///
/// Each step evaluates loss and gradient at the current point, records a row
/// if the step is on the checkpoint schedule, and hands both to the
/// optimizer. A non-finite loss or gradient is recorded and ends the run.
pub fn run_on(problem: &dyn Problem, spec: &RunSpec, seed: u64) -> Result<RunRecord> {
    spec.validate()?;
    let start = Instant::now();
    let mut groups = vec![ParamGroup::new(problem.initial_point(seed))];
    let mut opt = spec.optimizer.build(&groups, spec.steps)?;
    let every = spec.checkpoint_every;

    let mut rows = Vec::with_capacity(spec.schedule().len());
    let mut diverged = false;
    for k in 0..=spec.steps {
        let (loss, grad) = problem.loss_and_grad(&groups[0].theta);
        let grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        let finite = loss.is_finite() && grad_norm.is_finite();
        if k % every == 0 || k == spec.steps || !finite {
            rows.push(RunRow {
                step: k,
                loss,
                dt: opt.trust_scale(),
                grad_norm,
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
            });
        }
        if !finite {
            diverged = true;
            break;
        }
        if k == spec.steps {
            break;
        }
        opt.step(&mut groups, &[&grad], Some(loss))?;
    }

    Ok(RunRecord {
        optimizer: spec.optimizer.label().to_string(),
        problem: problem.name().to_string(),
        seed,
        rows,
        diverged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{OptimizerSpec, ProblemSpec};

    fn spec(optimizer: &str) -> RunSpec {
        RunSpec {
            problem: ProblemSpec::named("quadratic"),
            optimizer: OptimizerSpec {
                lr: Some(0.05),
                ..OptimizerSpec::named(optimizer)
            },
            steps: 25,
            seeds: vec![0],
            checkpoint_every: 10,
            out: None,
        }
    }

    #[test]
    fn records_schedule() {
        let rec = run_single(&spec("soaa"), 3).unwrap();
        let steps: Vec<u64> = rec.rows.iter().map(|r| r.step).collect();
        assert_eq!(steps, vec![0, 10, 20, 25]);
        assert!(!rec.diverged);
        assert_eq!(rec.rows[0].dt, Some(1.0));
        assert!(rec.rows.windows(2).all(|w| w[0].wall_ms <= w[1].wall_ms));
        assert!(rec.final_loss().unwrap() < rec.rows[0].loss);
    }

    #[test]
    fn baselines_have_no_dt() {
        let rec = run_single(&spec("adam"), 0).unwrap();
        assert!(rec.rows.iter().all(|r| r.dt.is_none()));
        assert_eq!(rec.optimizer, "adam");
    }

    #[test]
    fn zero_steps_is_config_error() {
        let s = RunSpec { steps: 0, ..spec("soaa") };
        assert_eq!(run_single(&s, 0).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn repeated_runs_match() {
        let a = run_single(&spec("soaa"), 5).unwrap();
        let b = run_single(&spec("soaa"), 5).unwrap();
        assert!(a.same_trajectory(&b));
        let c = run_single(&spec("soaa"), 6).unwrap();
        assert!(!a.same_trajectory(&c));
    }

    struct Blowup;

    impl Problem for Blowup {
        fn name(&self) -> &str {
            "blowup"
        }
        fn dim(&self) -> usize {
            1
        }
        fn initial_point(&self, _: u64) -> Vec<f64> {
            vec![1.0]
        }
        fn loss(&self, t: &[f64]) -> f64 {
            if t[0] < 0.9999 {
                f64::NAN
            } else {
                t[0]
            }
        }
        fn grad(&self, _: &[f64]) -> Vec<f64> {
            vec![1.0]
        }
    }

    #[test]
    fn divergence_stops_run_and_keeps_partial_trajectory() {
        let s = RunSpec {
            optimizer: OptimizerSpec::named("adam"),
            steps: 100,
            checkpoint_every: 50,
            ..spec("adam")
        };
        let rec = run_on(&Blowup, &s, 0).unwrap();
        assert!(rec.diverged);
        let last = rec.rows.last().unwrap();
        assert!(last.loss.is_nan());
        assert!(last.step < 100);
        assert_eq!(rec.rows[0].step, 0);
    }
}
