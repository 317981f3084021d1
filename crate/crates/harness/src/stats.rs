//! Per-checkpoint loss statistics across seeds.

use crate::run::RunRecord;

/// Mean and sample standard deviation of the loss at one checkpoint, over
/// the runs that did not diverge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointStat {
    pub step: u64,
    /// Number of runs contributing.
    pub count: usize,
    /// `None` when every run diverged.
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStats {
    pub problem: String,
    pub optimizer: String,
    pub checkpoints: Vec<CheckpointStat>,
    pub final_mean: Option<f64>,
    pub final_std: Option<f64>,
    pub runs: usize,
    pub diverged: usize,
}

/// Welford accumulator.
#[derive(Debug, Default, Clone, Copy)]
struct Running {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Running {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn mean(&self) -> Option<f64> {
        (self.n > 0).then_some(self.mean)
    }

    /// Sample (n − 1) standard deviation; 0 for a single run.
    fn std(&self) -> Option<f64> {
        match self.n {
            0 => None,
            1 => Some(0.0),
            n => Some((self.m2 / (n - 1) as f64).max(0.0).sqrt()),
        }
    }
}

/// Aggregates the records of one optimizer on one problem.
///
/// `schedule` lists the checkpoint steps; diverged runs are counted but
/// excluded from every statistic. Records must be given in seed order for
/// the result to be reproducible bit for bit.
pub fn summarize(records: &[RunRecord], schedule: &[u64]) -> SummaryStats {
    let ok: Vec<&RunRecord> = records.iter().filter(|r| !r.diverged).collect();
    let checkpoints = schedule
        .iter()
        .map(|&step| {
            let mut acc = Running::default();
            for rec in &ok {
                if let Some(row) = rec.rows.iter().find(|r| r.step == step) {
                    acc.push(row.loss);
                }
            }
            CheckpointStat {
                step,
                count: acc.n,
                mean: acc.mean(),
                std: acc.std(),
            }
        })
        .collect();

    let mut last = Running::default();
    for rec in &ok {
        if let Some(l) = rec.final_loss() {
            last.push(l);
        }
    }

    let first = records.first();
    SummaryStats {
        problem: first.map(|r| r.problem.clone()).unwrap_or_default(),
        optimizer: first.map(|r| r.optimizer.clone()).unwrap_or_default(),
        checkpoints,
        final_mean: last.mean(),
        final_std: last.std(),
        runs: records.len(),
        diverged: records.len() - ok.len(),
    }
}
