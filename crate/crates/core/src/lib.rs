//! Second-order adaptive Adam (SOAA): a diagonal-Fisher optimizer with an
//! adaptive trust region, reference Adam/AdamW baselines, and a small suite
//! of differentiable problems for benchmarking them.

pub mod baselines;
pub mod checkpoint;
pub mod error;
pub mod optimizer;
pub mod problems;
pub mod soaa;

pub use baselines::{Adam, AdamConfig};
pub use error::{OptimError, Result};
pub use optimizer::{GroupOverrides, Optimizer, ParamGroup};
pub use soaa::{Soaa, SoaaConfig, SoaaState, StepTrace};
