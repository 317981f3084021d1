//! Second-order adaptive Adam (SOAA).
//!
//! Adam-style first and second moments feed a diagonal Fisher estimate
//! `F = (1 + Σm̂² / Σ(ŝ + ε)) · ŝ`, and the step is normalised by
//! `max(dt·F, √ŝ)`. The global scalar `dt` is a trust-region scale driven by
//! the ratio of observed to predicted loss reduction and clamped to a window
//! that narrows from `[1, 2]` at the first step to `[1 - γ, 1 + γ]` at the
//! planned horizon.
//!
//! The optimizer is a plain state machine over flat `f64` vectors: all
//! reductions run left to right over each group's layout, so identical inputs
//! give bit-identical results.

use serde::{Deserialize, Serialize};

use crate::error::{OptimError, Result};
use crate::optimizer::{check_step_inputs, validate_overrides, Optimizer, ParamGroup};

/// Hyperparameters of the SOAA update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SoaaConfig {
    /// Learning rate.
    pub alpha: f64,
    /// First-moment (and loss average) decay.
    pub beta1: f64,
    /// Second-moment decay.
    pub beta2: f64,
    /// Width of the trust-region clamp window, in `(0, 1)`.
    pub gamma: f64,
    pub epsilon: f64,
    /// Decoupled weight decay.
    pub weight_decay: f64,
    /// Planned number of steps; sets how fast the clamp window narrows.
    pub total_steps: u64,
}

impl Default for SoaaConfig {
    fn default() -> Self {
        Self {
            alpha: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            gamma: 0.1,
            epsilon: 1e-8,
            weight_decay: 0.0,
            total_steps: 100,
        }
    }
}

impl SoaaConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(OptimError::config("alpha", format!("must be > 0, got {}", self.alpha)));
        }
        check_beta("beta1", self.beta1)?;
        check_beta("beta2", self.beta2)?;
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(OptimError::config(
                "gamma",
                format!("must lie in (0, 1), got {}", self.gamma),
            ));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(OptimError::config(
                "epsilon",
                format!("must be > 0, got {}", self.epsilon),
            ));
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return Err(OptimError::config(
                "weight_decay",
                format!("must be >= 0, got {}", self.weight_decay),
            ));
        }
        if self.total_steps == 0 {
            return Err(OptimError::config("total_steps", "must be >= 1"));
        }
        Ok(())
    }
}

pub(crate) fn check_beta(field: &'static str, beta: f64) -> Result<()> {
    if !(0.0..1.0).contains(&beta) {
        return Err(OptimError::config(field, format!("must lie in [0, 1), got {beta}")));
    }
    Ok(())
}

/// Number of scalar fields in [`SoaaState`]: `t`, `dt`, `l_avg`, `pr`.
pub const STATE_SCALARS: usize = 4;

/// Mutable optimizer state: two vectors per group plus four scalars.
#[derive(Debug, Clone, PartialEq)]
pub struct SoaaState {
    t: u64,
    m: Vec<Vec<f64>>,
    s: Vec<Vec<f64>>,
    dt: f64,
    l_avg: f64,
    pr: f64,
}

/// What a [`SoaaState`] actually holds in memory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateFootprint {
    /// Length of every stored vector, `m` and `s` interleaved per group.
    pub vector_lens: Vec<usize>,
    /// Reals held by the vectors' allocations (capacity, not length).
    pub allocated_reals: usize,
    pub scalars: usize,
}

impl SoaaState {
    /// Fresh state: zero moments, `dt = 1`, `l_avg = pr = 0`, `t = 0`.
    pub fn init(group_lens: &[usize]) -> Result<Self> {
        if group_lens.is_empty() {
            return Err(OptimError::Precondition("no parameter groups".into()));
        }
        for (gi, &n) in group_lens.iter().enumerate() {
            if n == 0 {
                return Err(OptimError::Shape {
                    group: gi,
                    expected: 1,
                    actual: 0,
                });
            }
        }
        Ok(Self {
            t: 0,
            m: group_lens.iter().map(|&n| vec![0.0; n]).collect(),
            s: group_lens.iter().map(|&n| vec![0.0; n]).collect(),
            dt: 1.0,
            l_avg: 0.0,
            pr: 0.0,
        })
    }

    /// Rebuilds a state from its fields, checking the state invariants.
    pub fn from_parts(
        t: u64,
        m: Vec<Vec<f64>>,
        s: Vec<Vec<f64>>,
        dt: f64,
        l_avg: f64,
        pr: f64,
    ) -> Result<Self> {
        if m.is_empty() || m.len() != s.len() {
            return Err(OptimError::Precondition(format!(
                "need matching non-empty moment lists, got {} and {}",
                m.len(),
                s.len()
            )));
        }
        for (gi, (mg, sg)) in m.iter().zip(&s).enumerate() {
            if mg.is_empty() || mg.len() != sg.len() {
                return Err(OptimError::Shape {
                    group: gi,
                    expected: mg.len(),
                    actual: sg.len(),
                });
            }
            if let Some(index) = mg.iter().position(|x| !x.is_finite()) {
                return Err(OptimError::Numerics {
                    what: "first moment",
                    group: gi,
                    index,
                });
            }
            if let Some(index) = sg.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
                return Err(OptimError::Numerics {
                    what: "second moment",
                    group: gi,
                    index,
                });
            }
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(OptimError::Precondition(format!("dt must be positive, got {dt}")));
        }
        if !l_avg.is_finite() || !pr.is_finite() {
            return Err(OptimError::Precondition("loss average and pr must be finite".into()));
        }
        Ok(Self {
            t,
            m,
            s,
            dt,
            l_avg,
            pr,
        })
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn l_avg(&self) -> f64 {
        self.l_avg
    }

    pub fn pr(&self) -> f64 {
        self.pr
    }

    pub fn num_groups(&self) -> usize {
        self.m.len()
    }

    pub fn group_lens(&self) -> Vec<usize> {
        self.m.iter().map(Vec::len).collect()
    }

    pub fn m(&self, group: usize) -> &[f64] {
        &self.m[group]
    }

    pub fn s(&self, group: usize) -> &[f64] {
        &self.s[group]
    }

    pub fn footprint(&self) -> StateFootprint {
        let mut vector_lens = Vec::with_capacity(2 * self.m.len());
        let mut allocated_reals = 0;
        for (mg, sg) in self.m.iter().zip(&self.s) {
            vector_lens.push(mg.len());
            vector_lens.push(sg.len());
            allocated_reals += mg.capacity() + sg.capacity();
        }
        StateFootprint {
            vector_lens,
            allocated_reals,
            scalars: STATE_SCALARS,
        }
    }

    /// EMA update of both moments for every group.
    ///
    /// Inputs are validated before anything is written, so on error the state
    /// is untouched.
    pub fn update_moments(&mut self, grads: &[&[f64]], beta1: f64, beta2: f64) -> Result<()> {
        if grads.len() != self.m.len() {
            return Err(OptimError::Precondition(format!(
                "expected {} gradient vectors, got {}",
                self.m.len(),
                grads.len()
            )));
        }
        for (gi, (mg, g)) in self.m.iter().zip(grads).enumerate() {
            if mg.len() != g.len() {
                return Err(OptimError::Shape {
                    group: gi,
                    expected: mg.len(),
                    actual: g.len(),
                });
            }
            if let Some(index) = g.iter().position(|x| !x.is_finite()) {
                return Err(OptimError::Numerics {
                    what: "gradient",
                    group: gi,
                    index,
                });
            }
        }
        for ((mg, sg), g) in self.m.iter_mut().zip(self.s.iter_mut()).zip(grads) {
            update_moments(mg, sg, g, beta1, beta2);
        }
        Ok(())
    }
}

/// `m ← β₁m + (1-β₁)g`, `s ← β₂s + (1-β₂)g²`. Slices must have equal length.
pub fn update_moments(m: &mut [f64], s: &mut [f64], g: &[f64], beta1: f64, beta2: f64) {
    debug_assert!(m.len() == g.len() && s.len() == g.len());
    for ((mi, si), &gi) in m.iter_mut().zip(s.iter_mut()).zip(g) {
        *mi = beta1 * *mi + (1.0 - beta1) * gi;
        *si = beta2 * *si + (1.0 - beta2) * gi * gi;
    }
}

/// Divides the moments by `1 - βᵗ`.
pub fn bias_correct(
    m: &[f64],
    s: &[f64],
    t: u64,
    beta1: f64,
    beta2: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    if t == 0 {
        return Err(OptimError::Precondition(
            "bias correction needs t >= 1".into(),
        ));
    }
    let c1 = 1.0 - powi_u64(beta1, t);
    let c2 = 1.0 - powi_u64(beta2, t);
    Ok((
        m.iter().map(|x| x / c1).collect(),
        s.iter().map(|x| x / c2).collect(),
    ))
}

/// `βᵗ` for a step counter that may exceed `i32::MAX`.
pub(crate) fn powi_u64(base: f64, t: u64) -> f64 {
    match i32::try_from(t) {
        Ok(e) => base.powi(e),
        Err(_) => base.powf(t as f64),
    }
}

/// Group-wide scalar `c = 1 + Σm̂² / Σ(ŝ + ε)`.
pub fn fisher_coefficient(m_hat: &[f64], s_hat: &[f64], epsilon: f64) -> f64 {
    let num = m_hat.iter().fold(0.0, |acc, x| acc + x * x);
    let den = s_hat.iter().fold(0.0, |acc, x| acc + (x + epsilon));
    1.0 + num / den
}

/// Diagonal Fisher estimate `c · ŝ` for one group.
pub fn fisher_approx(m_hat: &[f64], s_hat: &[f64], epsilon: f64) -> Vec<f64> {
    let c = fisher_coefficient(m_hat, s_hat, epsilon);
    s_hat.iter().map(|x| c * x).collect()
}

/// Element-wise `max(dt·F, √ŝ)`.
pub fn trust_region_scale(dt: f64, fisher: &[f64], s_hat: &[f64]) -> Vec<f64> {
    fisher
        .iter()
        .zip(s_hat)
        .map(|(f, s)| (dt * f).max(s.sqrt()))
        .collect()
}

/// Element-wise `m̂·dt / (scale + ε)`.
pub fn adjusted_gradient(m_hat: &[f64], dt: f64, scale: &[f64], epsilon: f64) -> Vec<f64> {
    m_hat
        .iter()
        .zip(scale)
        .map(|(m, r)| (m * dt) / (r + epsilon))
        .collect()
}

/// Clamp window `[(1-γ)^e, 1 + γ^e]` for `dt` at step `t`, with
/// `e = min(t-1, T) / T`.
pub fn dt_bounds(gamma: f64, t: u64, total_steps: u64) -> (f64, f64) {
    let e = t.saturating_sub(1).min(total_steps) as f64 / total_steps as f64;
    ((1.0 - gamma).powf(e), 1.0 + gamma.powf(e))
}

/// Intermediate values of one group during a step.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupTrace {
    pub m_hat: Vec<f64>,
    pub s_hat: Vec<f64>,
    pub fisher_coefficient: f64,
    pub fisher: Vec<f64>,
    pub trust_scale: Vec<f64>,
    pub adjusted: Vec<f64>,
}

/// Everything computed during one call to [`Soaa::step_traced`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepTrace {
    pub t: u64,
    pub groups: Vec<GroupTrace>,
    /// `dt` used for this step's update (before the trust-region update).
    pub dt_used: f64,
    pub loss: Option<f64>,
    /// Bias-corrected loss average, when a loss was supplied.
    pub l_hat: Option<f64>,
    /// `dt` after the step.
    pub dt: f64,
    /// Predicted reduction after the step.
    pub pr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Soaa {
    config: SoaaConfig,
    state: SoaaState,
}

impl Soaa {
    pub fn new(config: SoaaConfig, groups: &[ParamGroup]) -> Result<Self> {
        config.validate()?;
        validate_overrides(groups)?;
        let lens: Vec<usize> = groups.iter().map(ParamGroup::len).collect();
        let state = SoaaState::init(&lens)?;
        Ok(Self { config, state })
    }

    pub fn from_parts(config: SoaaConfig, state: SoaaState) -> Result<Self> {
        config.validate()?;
        Ok(Self { config, state })
    }

    pub fn config(&self) -> &SoaaConfig {
        &self.config
    }

    pub fn state(&self) -> &SoaaState {
        &self.state
    }

    pub fn into_parts(self) -> (SoaaConfig, SoaaState) {
        (self.config, self.state)
    }

    /// One SOAA iteration, returning every intermediate quantity.
    ///
    /// Weight decay (when non-zero) shrinks θ before the gradient step. With
    /// `loss == None` the loss average, `dt` and `pr` are left untouched.
    pub fn step_traced(
        &mut self,
        groups: &mut [ParamGroup],
        grads: &[&[f64]],
        loss: Option<f64>,
    ) -> Result<StepTrace> {
        let lens = self.state.group_lens();
        check_step_inputs(&lens, groups, grads, loss)?;
        validate_overrides(groups)?;

        let SoaaConfig {
            alpha,
            beta1,
            beta2,
            gamma,
            epsilon,
            weight_decay,
            total_steps,
        } = self.config;

        let st = &mut self.state;
        st.t += 1;
        let t = st.t;
        st.update_moments(grads, beta1, beta2)?;

        let dt_used = st.dt;
        let mut traces = Vec::with_capacity(groups.len());
        for (gi, group) in groups.iter_mut().enumerate() {
            let (m_hat, s_hat) = bias_correct(&st.m[gi], &st.s[gi], t, beta1, beta2)?;
            let c = fisher_coefficient(&m_hat, &s_hat, epsilon);
            let fisher: Vec<f64> = s_hat.iter().map(|x| c * x).collect();
            let trust = trust_region_scale(dt_used, &fisher, &s_hat);
            let adjusted = adjusted_gradient(&m_hat, dt_used, &trust, epsilon);

            let lr = group.overrides.alpha.unwrap_or(alpha);
            let wd = group.overrides.weight_decay.unwrap_or(weight_decay);
            if wd != 0.0 {
                for th in group.theta.iter_mut() {
                    *th -= lr * wd * *th;
                }
            }
            for (th, a) in group.theta.iter_mut().zip(&adjusted) {
                *th -= lr * a;
            }

            traces.push(GroupTrace {
                m_hat,
                s_hat,
                fisher_coefficient: c,
                fisher,
                trust_scale: trust,
                adjusted,
            });
        }

        let mut l_hat = None;
        if let Some(loss) = loss {
            st.l_avg = beta1 * st.l_avg + (1.0 - beta1) * loss;
            let lh = st.l_avg / (1.0 - powi_u64(beta1, t));
            let (lo, hi) = dt_bounds(gamma, t, total_steps);
            let ratio = (lh - loss) / st.pr.max(epsilon);
            st.dt = (ratio * st.dt).max(lo).min(hi);

            let mut pr = 0.0;
            for (gi, tr) in traces.iter().enumerate() {
                let lr = groups[gi].overrides.alpha.unwrap_or(alpha);
                let mut linear = 0.0;
                let mut quad = 0.0;
                for ((m, s), a) in tr.m_hat.iter().zip(&tr.s_hat).zip(&tr.adjusted) {
                    linear += m * a;
                    quad += s * a * a;
                }
                pr += (linear - 0.5 * quad) * lr;
            }
            st.pr = pr;
            l_hat = Some(lh);
        }

        Ok(StepTrace {
            t,
            groups: traces,
            dt_used,
            loss,
            l_hat,
            dt: st.dt,
            pr: st.pr,
        })
    }
}

impl Optimizer for Soaa {
    fn name(&self) -> &'static str {
        "soaa"
    }

    fn step(
        &mut self,
        groups: &mut [ParamGroup],
        grads: &[&[f64]],
        loss: Option<f64>,
    ) -> Result<()> {
        self.step_traced(groups, grads, loss).map(|_| ())
    }

    fn steps_taken(&self) -> u64 {
        self.state.t
    }

    fn trust_scale(&self) -> Option<f64> {
        Some(self.state.dt)
    }

    fn checkpoint(&self) -> Vec<u8> {
        crate::checkpoint::encode_soaa(self)
    }
}
