//! CSV trajectories, the summary CSV and the side-by-side comparison table.
//!
//! Floats are written in shortest round-trip form, so parsing a file gives
//! back the exact `f64` values that were written.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::run::{RunRecord, RunRow};
use crate::stats::SummaryStats;

pub const TRAJECTORY_HEADER: [&str; 8] = [
    "optimizer", "problem", "seed", "step", "loss", "dt", "grad_norm", "wall_ms",
];
pub const SUMMARY_HEADER: [&str; 6] = [
    "problem",
    "optimizer",
    "checkpoint_step",
    "mean_loss",
    "std_loss",
    "diverged_count",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct TrajectoryLine {
    optimizer: String,
    problem: String,
    seed: u64,
    step: u64,
    loss: f64,
    dt: Option<f64>,
    grad_norm: f64,
    wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryLine {
    pub problem: String,
    pub optimizer: String,
    pub checkpoint_step: u64,
    pub mean_loss: Option<f64>,
    pub std_loss: Option<f64>,
    pub diverged_count: usize,
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> HarnessError + '_ {
    move |source| HarnessError::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| HarnessError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    Ok(())
}

/// Writes the given runs to one trajectory CSV.
pub fn write_trajectories(path: &Path, records: &[RunRecord]) -> Result<()> {
    create_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for rec in records {
        for row in &rec.rows {
            w.serialize(TrajectoryLine {
                optimizer: rec.optimizer.clone(),
                problem: rec.problem.clone(),
                seed: rec.seed,
                step: row.step,
                loss: row.loss,
                dt: row.dt,
                grad_norm: row.grad_norm,
                wall_ms: row.wall_ms,
            })
            .map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a trajectory CSV back into records, one per (optimizer, problem,
/// seed) run in file order. A run counts as diverged when any row has a
/// non-finite loss or gradient norm.
pub fn read_trajectories(path: &Path) -> Result<Vec<RunRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut out: Vec<RunRecord> = Vec::new();
    for line in r.deserialize::<TrajectoryLine>() {
        let line = line.map_err(csv_err(path))?;
        let row = RunRow {
            step: line.step,
            loss: line.loss,
            dt: line.dt,
            grad_norm: line.grad_norm,
            wall_ms: line.wall_ms,
        };
        let bad = !(row.loss.is_finite() && row.grad_norm.is_finite());
        match out.last_mut() {
            Some(rec)
                if rec.optimizer == line.optimizer
                    && rec.problem == line.problem
                    && rec.seed == line.seed =>
            {
                rec.rows.push(row);
                rec.diverged |= bad;
            }
            _ => out.push(RunRecord {
                optimizer: line.optimizer,
                problem: line.problem,
                seed: line.seed,
                rows: vec![row],
                diverged: bad,
            }),
        }
    }
    Ok(out)
}

pub fn summary_lines(stats: &[SummaryStats]) -> Vec<SummaryLine> {
    stats
        .iter()
        .flat_map(|s| {
            s.checkpoints.iter().map(move |c| SummaryLine {
                problem: s.problem.clone(),
                optimizer: s.optimizer.clone(),
                checkpoint_step: c.step,
                mean_loss: c.mean,
                std_loss: c.std,
                diverged_count: s.diverged,
            })
        })
        .collect()
}

pub fn write_summary(path: &Path, stats: &[SummaryStats]) -> Result<()> {
    create_parent(path)?;
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    for line in summary_lines(stats) {
        w.serialize(line).map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryLine>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(csv_err(path))
}

/// `(mean, std)` per optimizer column; `None` where that optimizer has no data.
pub type TableRow = (u64, Vec<Option<(f64, f64)>>);

/// Mean/std per checkpoint step, one column pair per optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    pub labels: Vec<String>,
    pub rows: Vec<TableRow>,
}

impl ComparisonTable {
    pub fn from_stats(stats: &[SummaryStats]) -> Self {
        let mut by_step: BTreeMap<u64, Vec<Option<(f64, f64)>>> = BTreeMap::new();
        for (col, s) in stats.iter().enumerate() {
            for c in &s.checkpoints {
                let cells = by_step.entry(c.step).or_insert_with(|| vec![None; stats.len()]);
                cells[col] = c.mean.zip(c.std);
            }
        }
        Self {
            labels: stats.iter().map(|s| s.optimizer.clone()).collect(),
            rows: by_step.into_iter().collect(),
        }
    }

    pub fn render(&self) -> String {
        let mut out = format!("{:>8}", "step");
        for l in &self.labels {
            let _ = write!(out, "  {:>24}", format!("{l} mean ± std"));
        }
        out.push('\n');
        for (step, cells) in &self.rows {
            let _ = write!(out, "{step:>8}");
            for cell in cells {
                let text = match cell {
                    Some((m, s)) => format!("{m:.4e} ± {s:.2e}"),
                    None => "-".to_string(),
                };
                let _ = write!(out, "  {text:>24}");
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        create_parent(path)?;
        let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
        let mut header = vec!["step".to_string()];
        for l in &self.labels {
            header.push(format!("{l}_mean"));
            header.push(format!("{l}_std"));
        }
        w.write_record(&header).map_err(csv_err(path))?;
        for (step, cells) in &self.rows {
            let mut rec = vec![step.to_string()];
            for cell in cells {
                match cell {
                    Some((m, s)) => {
                        rec.push(m.to_string());
                        rec.push(s.to_string());
                    }
                    None => rec.extend([String::new(), String::new()]),
                }
            }
            w.write_record(&rec).map_err(csv_err(path))?;
        }
        w.flush().map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::summarize;

    fn record(optimizer: &str, seed: u64, losses: &[f64]) -> RunRecord {
        RunRecord {
            optimizer: optimizer.into(),
            problem: "quadratic".into(),
            seed,
            rows: losses
                .iter()
                .enumerate()
                .map(|(i, &loss)| RunRow {
                    step: 5 * i as u64,
                    loss,
                    dt: (optimizer == "soaa").then_some(0.9 + i as f64 * 0.1),
                    grad_norm: loss.sqrt(),
                    wall_ms: 0.1 * i as f64,
                })
                .collect(),
            diverged: !losses.iter().all(|l| l.is_finite()),
        }
    }

    #[test]
    fn trajectory_header_and_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let recs = vec![
            record("soaa", 0, &[1.0 / 3.0, 2.0f64.sqrt(), 1e-300]),
            record("adam", 1, &[0.1, 7.25e12]),
            record("adam", 2, &[0.5, f64::NAN]),
        ];
        write_trajectories(&path, &recs).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), TRAJECTORY_HEADER.join(","));
        assert!(text.lines().nth(4).unwrap().contains(",,"), "dt blank for adam");
        let back = read_trajectories(&path).unwrap();
        assert_eq!(back.len(), 3);
        for (a, b) in recs.iter().zip(&back) {
            assert!(a.same_trajectory(b));
            let wall = |r: &RunRecord| r.rows.iter().map(|x| x.wall_ms.to_bits()).collect::<Vec<_>>();
            assert_eq!(wall(a), wall(b));
        }
        assert!(back[2].diverged);
    }

    #[test]
    fn summary_schema() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let s = summarize(&[record("soaa", 0, &[1.0, 0.5]), record("soaa", 1, &[3.0, 0.5])], &[0, 5]);
        write_summary(&path, &[s]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), SUMMARY_HEADER.join(","));
        let lines = read_summary(&path).unwrap();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].mean_loss, Some(2.0));
        assert_eq!(lines[1].std_loss, Some(0.0));
    }

    #[test]
    fn table_aligns_steps() {
        let a = summarize(&[record("soaa", 0, &[1.0, 0.5, 0.25])], &[0, 5, 10]);
        let b = summarize(&[record("adam", 0, &[1.0, 0.75])], &[0, 5]);
        let t = ComparisonTable::from_stats(&[a, b]);
        assert_eq!(t.labels, vec!["soaa", "adam"]);
        assert_eq!(t.rows.len(), 3);
        assert_eq!(t.rows[2].1[1], None);
        assert!(t.render().contains("adam mean"));
    }
}
