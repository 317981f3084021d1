//! Seeded head-to-head comparisons.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{HarnessError, Result};
use crate::output::{write_summary, write_trajectories, ComparisonTable};
use crate::run::{run_on, RunRecord};
use crate::spec::RunSpec;
use crate::stats::{summarize, SummaryStats};

#[derive(Debug, Clone)]
pub struct CompareOutcome {
    /// Specs as run, with labels made unique.
    pub specs: Vec<RunSpec>,
    /// `records[i][j]`: spec `i`, seed `j` (in the specs' seed order).
    pub records: Vec<Vec<RunRecord>>,
    pub summaries: Vec<SummaryStats>,
    pub table: ComparisonTable,
}

/// Runs every spec over the shared seed list.
///
/// All specs must name the same problem and seeds, so every optimizer starts
/// from the same points. Seeds run in parallel; results are collected in
/// seed order.
pub fn run_compare(specs: &[RunSpec]) -> Result<CompareOutcome> {
    let first = specs
        .first()
        .ok_or_else(|| HarnessError::Config("nothing to compare".into()))?;
    for s in specs {
        s.validate()?;
        if s.problem != first.problem {
            return Err(HarnessError::Config(format!(
                "all compared runs must share one problem: {:?} vs {:?}",
                first.problem.name, s.problem.name
            )));
        }
        if s.seeds != first.seeds {
            return Err(HarnessError::Config(
                "all compared runs must share one seed list".into(),
            ));
        }
    }

    let specs = unique_labels(specs);
    let problem = first.problem.build_validated()?;
    let problem = problem.as_ref();

    let mut records = Vec::with_capacity(specs.len());
    let mut summaries = Vec::with_capacity(specs.len());
    for spec in &specs {
        let recs = spec
            .seeds
            .par_iter()
            .map(|&seed| run_on(problem, spec, seed))
            .collect::<Result<Vec<_>>>()?;
        summaries.push(summarize(&recs, &spec.schedule()));
        records.push(recs);
    }
    let table = ComparisonTable::from_stats(&summaries);
    Ok(CompareOutcome {
        specs,
        records,
        summaries,
        table,
    })
}

/// Repeated labels get a `#2`, `#3`, ... suffix.
fn unique_labels(specs: &[RunSpec]) -> Vec<RunSpec> {
    let mut seen: HashMap<String, usize> = HashMap::new();
    specs
        .iter()
        .map(|s| {
            let mut s = s.clone();
            let base = s.optimizer.label().to_string();
            let n = seen.entry(base.clone()).or_insert(0);
            *n += 1;
            if *n > 1 {
                s.optimizer.label = Some(format!("{base}#{n}"));
            }
            s
        })
        .collect()
}

/// Files written by [`write_outputs`].
#[derive(Debug, Clone)]
pub struct WrittenFiles {
    pub trajectories: Vec<PathBuf>,
    pub summary: PathBuf,
    pub comparison: PathBuf,
}

/// Writes one trajectory CSV per run plus `summary.csv` and `comparison.csv`.
pub fn write_outputs(dir: &Path, outcome: &CompareOutcome) -> Result<WrittenFiles> {
    let mut trajectories = Vec::new();
    for recs in &outcome.records {
        for rec in recs {
            let name = format!(
                "{}_{}_seed{}.csv",
                rec.problem,
                rec.optimizer.replace(|c: char| !c.is_ascii_alphanumeric() && c != '-', "_"),
                rec.seed
            );
            let path = dir.join(name);
            write_trajectories(&path, std::slice::from_ref(rec))?;
            trajectories.push(path);
        }
    }
    let summary = dir.join("summary.csv");
    write_summary(&summary, &outcome.summaries)?;
    let comparison = dir.join("comparison.csv");
    outcome.table.write_csv(&comparison)?;
    Ok(WrittenFiles {
        trajectories,
        summary,
        comparison,
    })
}
