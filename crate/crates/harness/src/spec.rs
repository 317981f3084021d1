//! Run specifications and the JSON benchmark config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use soaa::problems::{self, Problem, ProblemParams, PROBLEM_NAMES};
use soaa::{Adam, AdamConfig, Optimizer, ParamGroup, Soaa, SoaaConfig};

use crate::error::{HarnessError, Result};

pub const OPTIMIZER_NAMES: [&str; 3] = ["soaa", "adam", "adamw"];

/// Gradcheck tolerance every problem must meet before it is benchmarked.
pub const GRADCHECK_TOLERANCE: f64 = 1e-5;
pub const GRADCHECK_POINTS: u64 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub name: String,
    #[serde(default)]
    pub dim: Option<usize>,
    #[serde(default)]
    pub condition_number: Option<f64>,
    #[serde(default)]
    pub n_samples: Option<usize>,
    #[serde(default)]
    pub hidden: Option<usize>,
    #[serde(default)]
    pub data_seed: Option<u64>,
}

impl ProblemSpec {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.to_string(),
            dim: None,
            condition_number: None,
            n_samples: None,
            hidden: None,
            data_seed: None,
        }
    }

    pub fn params(&self) -> ProblemParams {
        ProblemParams {
            dim: self.dim,
            condition_number: self.condition_number,
            n_samples: self.n_samples,
            hidden: self.hidden,
            data_seed: self.data_seed,
        }
    }

    pub fn build(&self) -> Result<Box<dyn Problem>> {
        if !PROBLEM_NAMES.contains(&self.name.as_str()) {
            return Err(HarnessError::Lookup {
                kind: "problem",
                name: self.name.clone(),
                known: PROBLEM_NAMES.join(", "),
            });
        }
        Ok(problems::build(&self.name, &self.params())?)
    }

    /// Builds the problem and gradchecks it; a failing problem is an error.
    pub fn build_validated(&self) -> Result<Box<dyn Problem>> {
        let problem = self.build()?;
        problems::validate_problem(problem.as_ref(), GRADCHECK_POINTS, GRADCHECK_TOLERANCE)?;
        Ok(problem)
    }
}

/// Optimizer name plus hyperparameters; unset fields take the optimizer's
/// defaults. `gamma` and `total_steps` only apply to SOAA.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSpec {
    pub name: String,
    /// Column label in outputs; defaults to `name`.
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub lr: Option<f64>,
    #[serde(default)]
    pub beta1: Option<f64>,
    #[serde(default)]
    pub beta2: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub weight_decay: Option<f64>,
    #[serde(default)]
    pub total_steps: Option<u64>,
}

impl OptimizerSpec {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.to_string(),
            ..Self::default()
        }
    }

    pub fn label(&self) -> &str {
        self.label.as_deref().unwrap_or(&self.name)
    }

    pub fn check_name(&self) -> Result<()> {
        if OPTIMIZER_NAMES.contains(&self.name.as_str()) {
            Ok(())
        } else {
            Err(HarnessError::Lookup {
                kind: "optimizer",
                name: self.name.clone(),
                known: OPTIMIZER_NAMES.join(", "),
            })
        }
    }

    pub fn soaa_config(&self, run_steps: u64) -> SoaaConfig {
        let d = SoaaConfig::default();
        SoaaConfig {
            alpha: self.lr.unwrap_or(d.alpha),
            beta1: self.beta1.unwrap_or(d.beta1),
            beta2: self.beta2.unwrap_or(d.beta2),
            gamma: self.gamma.unwrap_or(d.gamma),
            epsilon: self.eps.unwrap_or(d.epsilon),
            weight_decay: self.weight_decay.unwrap_or(d.weight_decay),
            total_steps: self.total_steps.unwrap_or(run_steps),
        }
    }

    pub fn adam_config(&self) -> AdamConfig {
        let d = if self.name == "adamw" {
            AdamConfig::adamw()
        } else {
            AdamConfig::default()
        };
        AdamConfig {
            alpha: self.lr.unwrap_or(d.alpha),
            beta1: self.beta1.unwrap_or(d.beta1),
            beta2: self.beta2.unwrap_or(d.beta2),
            epsilon: self.eps.unwrap_or(d.epsilon),
            weight_decay: self.weight_decay.unwrap_or(d.weight_decay),
            decoupled: d.decoupled,
        }
    }

    /// Fresh optimizer for parameters of the given groups.
    pub fn build(&self, groups: &[ParamGroup], run_steps: u64) -> Result<Box<dyn Optimizer>> {
        self.check_name()?;
        Ok(match self.name.as_str() {
            "soaa" => Box::new(Soaa::new(self.soaa_config(run_steps), groups)?),
            _ => Box::new(Adam::new(self.adam_config(), groups)?),
        })
    }
}

/// One optimizer on one problem over a list of seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub problem: ProblemSpec,
    pub optimizer: OptimizerSpec,
    pub steps: u64,
    pub seeds: Vec<u64>,
    pub checkpoint_every: u64,
    pub out: Option<PathBuf>,
}

impl RunSpec {
    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(HarnessError::Config("steps must be >= 1".into()));
        }
        if self.seeds.is_empty() {
            return Err(HarnessError::Config("seed list is empty".into()));
        }
        if self.checkpoint_every == 0 || self.checkpoint_every > self.steps {
            return Err(HarnessError::Config(format!(
                "checkpoint_every must lie in 1..={}, got {}",
                self.steps, self.checkpoint_every
            )));
        }
        self.optimizer.check_name()?;
        // surfaces hyperparameter errors before any run starts
        self.optimizer
            .build(&[ParamGroup::new(vec![0.0])], self.steps)
            .map(|_| ())
    }

    /// Checkpoint steps: 0, every `checkpoint_every` steps, and the last step.
    pub fn schedule(&self) -> Vec<u64> {
        let mut steps: Vec<u64> = (0..=self.steps).step_by(self.checkpoint_every as usize).collect();
        if steps.last() != Some(&self.steps) {
            steps.push(self.steps);
        }
        steps
    }
}

/// Benchmark config file. Flags given on the command line override it.
///
/// ```json
/// {
///   "problem": {"name": "quadratic", "dim": 10, "condition_number": 10.0},
///   "steps": 1000,
///   "seeds": [0, 1, 2],
///   "checkpoint_every": 100,
///   "out": "results",
///   "optimizers": [{"name": "soaa", "lr": 0.05}, {"name": "adam"}, {"name": "adamw"}]
/// }
/// ```
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub problem: Option<ProblemSpec>,
    pub steps: Option<u64>,
    pub seeds: Option<Vec<u64>>,
    pub checkpoint_every: Option<u64>,
    pub out: Option<PathBuf>,
    pub optimizers: Vec<OptimizerSpec>,
}

impl BenchConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| HarnessError::Json {
            path: path.to_path_buf(),
            source,
        })
    }

    /// One [`RunSpec`] per listed optimizer.
    pub fn run_specs(&self) -> Result<Vec<RunSpec>> {
        let problem = self
            .problem
            .clone()
            .ok_or_else(|| HarnessError::Config("no problem given".into()))?;
        if self.optimizers.is_empty() {
            return Err(HarnessError::Config("no optimizers given".into()));
        }
        let steps = self.steps.unwrap_or(1000);
        let specs: Vec<RunSpec> = self
            .optimizers
            .iter()
            .map(|optimizer| RunSpec {
                problem: problem.clone(),
                optimizer: optimizer.clone(),
                steps,
                seeds: self.seeds.clone().unwrap_or_else(|| vec![0, 1, 2]),
                checkpoint_every: self.checkpoint_every.unwrap_or_else(|| (steps / 10).max(1)),
                out: self.out.clone(),
            })
            .collect();
        for spec in &specs {
            spec.validate()?;
        }
        Ok(specs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> RunSpec {
        RunSpec {
            problem: ProblemSpec::named("quadratic"),
            optimizer: OptimizerSpec::named("soaa"),
            steps: 10,
            seeds: vec![0],
            checkpoint_every: 4,
            out: None,
        }
    }

    #[test]
    fn schedule_includes_last_step() {
        assert_eq!(spec().schedule(), vec![0, 4, 8, 10]);
        let s = RunSpec {
            checkpoint_every: 5,
            ..spec()
        };
        assert_eq!(s.schedule(), vec![0, 5, 10]);
    }

    #[test]
    fn validation_errors() {
        assert!(RunSpec { steps: 0, ..spec() }.validate().is_err());
        assert!(RunSpec { seeds: vec![], ..spec() }.validate().is_err());
        assert!(RunSpec { checkpoint_every: 11, ..spec() }.validate().is_err());
        let bad = RunSpec {
            optimizer: OptimizerSpec::named("sgd"),
            ..spec()
        };
        match bad.validate() {
            Err(HarnessError::Lookup { known, .. }) => assert!(known.contains("adamw")),
            other => panic!("{other:?}"),
        }
        let bad_gamma = RunSpec {
            optimizer: OptimizerSpec {
                gamma: Some(1.5),
                ..OptimizerSpec::named("soaa")
            },
            ..spec()
        };
        assert_eq!(bad_gamma.validate().unwrap_err().exit_code(), 2);
    }

    #[test]
    fn unknown_problem_lists_names() {
        match ProblemSpec::named("beale").build() {
            Err(HarnessError::Lookup { known, .. }) => assert!(known.contains("rosenbrock")),
            Err(e) => panic!("{e}"),
            Ok(_) => panic!("accepted"),
        }
    }

    #[test]
    fn config_file_parses_with_defaults() {
        let cfg: BenchConfig = serde_json::from_str(
            r#"{"problem": {"name": "tiny_mlp", "hidden": 4},
                "steps": 50,
                "optimizers": [{"name": "soaa", "lr": 0.01}, {"name": "adamw", "label": "aw"}]}"#,
        )
        .unwrap();
        let specs = cfg.run_specs().unwrap();
        assert_eq!(specs.len(), 2);
        assert_eq!(specs[0].problem.hidden, Some(4));
        assert_eq!(specs[0].seeds, vec![0, 1, 2]);
        assert_eq!(specs[0].checkpoint_every, 5);
        assert_eq!(specs[0].optimizer.soaa_config(50).total_steps, 50);
        assert_eq!(specs[1].optimizer.label(), "aw");
        assert!(specs[1].optimizer.adam_config().decoupled);
    }

    #[test]
    fn config_file_rejects_unknown_keys() {
        assert!(serde_json::from_str::<BenchConfig>(r#"{"stepz": 3}"#).is_err());
        assert!(serde_json::from_str::<BenchConfig>(
            r#"{"optimizers": [{"name": "soaa", "learning_rate": 1}]}"#
        )
        .is_err());
    }
}
