//! Straight-line transcription of the SOAA iteration, used as a test oracle.
//!
//! Written index-by-index over nested vectors with no shared code from the
//! crate, so it can check `Soaa::step` independently. `v̂` is read as the
//! bias-corrected second moment `ŝ`.
#![allow(dead_code, clippy::needless_range_loop, clippy::assign_op_pattern)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    pub alpha: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub gamma: f64,
    pub eps: f64,
    pub lambda: f64,
    pub total: u64,
}

#[derive(Debug, Clone)]
pub struct OracleState {
    pub t: u64,
    pub m: Vec<Vec<f64>>,
    pub s: Vec<Vec<f64>>,
    pub dt: f64,
    pub l_avg: f64,
    pub pr: f64,
}

/// Intermediates of the last oracle step for the first group.
#[derive(Debug, Clone, Default)]
pub struct OracleTrace {
    pub m_hat: Vec<f64>,
    pub s_hat: Vec<f64>,
    pub fisher: Vec<f64>,
    pub trust: Vec<f64>,
    pub g_adj: Vec<f64>,
}

pub fn oracle_step(
    cfg: &OracleConfig,
    st: &mut OracleState,
    theta: &mut [Vec<f64>],
    grads: &[Vec<f64>],
    loss: Option<f64>,
) -> OracleTrace {
    let mut trace = OracleTrace::default();
    st.t = st.t + 1;
    let t = st.t as f64;

    let mut all_m_hat = Vec::new();
    let mut all_v_hat = Vec::new();
    let mut all_g_adj = Vec::new();
    for k in 0..theta.len() {
        let n = theta[k].len();
        // moments
        for i in 0..n {
            st.m[k][i] = cfg.beta1 * st.m[k][i] + (1.0 - cfg.beta1) * grads[k][i];
            st.s[k][i] = cfg.beta2 * st.s[k][i] + (1.0 - cfg.beta2) * grads[k][i] * grads[k][i];
        }
        // bias correction
        let mut m_hat = vec![0.0; n];
        let mut s_hat = vec![0.0; n];
        for i in 0..n {
            m_hat[i] = st.m[k][i] / (1.0 - cfg.beta1.powf(t));
            s_hat[i] = st.s[k][i] / (1.0 - cfg.beta2.powf(t));
        }
        let v_hat = s_hat.clone();
        // Fisher approximation
        let mut sum_m2 = 0.0;
        let mut sum_v = 0.0;
        for i in 0..n {
            sum_m2 += m_hat[i] * m_hat[i];
            sum_v += v_hat[i] + cfg.eps;
        }
        let mut fisher = vec![0.0; n];
        for i in 0..n {
            fisher[i] = (1.0 + sum_m2 / sum_v) * v_hat[i];
        }
        // trust scale and adjusted gradient
        let mut trust = vec![0.0; n];
        let mut g_adj = vec![0.0; n];
        for i in 0..n {
            let a = st.dt * fisher[i];
            let b = s_hat[i].sqrt();
            trust[i] = if a > b { a } else { b };
            g_adj[i] = m_hat[i] * st.dt / (trust[i] + cfg.eps);
        }
        // weight decay, then parameter update
        if cfg.lambda != 0.0 {
            for i in 0..n {
                theta[k][i] = theta[k][i] - cfg.alpha * cfg.lambda * theta[k][i];
            }
        }
        for i in 0..n {
            theta[k][i] = theta[k][i] - cfg.alpha * g_adj[i];
        }
        if k == 0 {
            trace = OracleTrace {
                m_hat: m_hat.clone(),
                s_hat: s_hat.clone(),
                fisher,
                trust,
                g_adj: g_adj.clone(),
            };
        }
        all_m_hat.extend(m_hat);
        all_v_hat.extend(v_hat);
        all_g_adj.extend(g_adj);
    }

    if let Some(l) = loss {
        st.l_avg = cfg.beta1 * st.l_avg + (1.0 - cfg.beta1) * l;
        let l_hat = st.l_avg / (1.0 - cfg.beta1.powf(t));
        let mut expo = (t - 1.0) / cfg.total as f64;
        if expo > 1.0 {
            expo = 1.0;
        }
        let lower = (1.0 - cfg.gamma).powf(expo);
        let upper = 1.0 + cfg.gamma.powf(expo);
        let denom = if st.pr > cfg.eps { st.pr } else { cfg.eps };
        let mut dt = (l_hat - l) / denom * st.dt;
        if dt < lower {
            dt = lower;
        }
        if dt > upper {
            dt = upper;
        }
        st.dt = dt;

        let mut lin = 0.0;
        let mut quad = 0.0;
        for i in 0..all_m_hat.len() {
            lin += all_m_hat[i] * all_g_adj[i];
            quad += all_v_hat[i] * all_g_adj[i] * all_g_adj[i];
        }
        st.pr = (lin - 0.5 * quad) * cfg.alpha;
    }
    trace
}

/// One randomized single-step case: config, pre-step state, θ, g and loss.
#[derive(Debug, Clone)]
pub struct Instance {
    pub cfg: OracleConfig,
    pub state: OracleState,
    pub theta: Vec<Vec<f64>>,
    pub grads: Vec<Vec<f64>>,
    pub loss: Option<f64>,
}

pub fn random_instance(rng: &mut ChaCha8Rng, n: usize) -> Instance {
    let total = rng.gen_range(1..=1000u64);
    let cfg = OracleConfig {
        alpha: 10f64.powf(rng.gen_range(-4.0..-1.0)),
        beta1: rng.gen_range(0.0..0.99),
        beta2: rng.gen_range(0.9..0.9999),
        gamma: rng.gen_range(0.01..0.99),
        eps: 10f64.powf(rng.gen_range(-10.0..-6.0)),
        lambda: if rng.gen_bool(0.5) { 0.0 } else { rng.gen_range(0.0..0.1) },
        total,
    };
    let fresh = rng.gen_bool(0.2);
    let state = if fresh {
        OracleState {
            t: 0,
            m: vec![vec![0.0; n]],
            s: vec![vec![0.0; n]],
            dt: 1.0,
            l_avg: 0.0,
            pr: 0.0,
        }
    } else {
        OracleState {
            t: rng.gen_range(1..=2 * total),
            m: vec![(0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()],
            s: vec![(0..n).map(|_| rng.gen_range(0.0..1.0)).collect()],
            dt: rng.gen_range(0.5..2.0),
            l_avg: rng.gen_range(0.0..5.0),
            pr: rng.gen_range(-1e-3..1e-2),
        }
    };
    Instance {
        cfg,
        state,
        theta: vec![(0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()],
        grads: vec![(0..n).map(|_| rng.gen_range(-3.0..3.0)).collect()],
        loss: if rng.gen_bool(0.9) {
            Some(rng.gen_range(0.0..5.0))
        } else {
            None
        },
    }
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}
