//! CSV and JSON artifacts of an experiment.
//!
//! | file | header |
//! |---|---|
//! | `regret_quantiles.csv` | `epoch,metric,n,mean,std_across_repeats,bootstrap_std_of_mean,q10,q25,q50,q75,q90` |
//! | `first_encounter.csv` | `tolerance,epoch,count` (`epoch` is `never` for repeats that never got within tolerance) |
//! | `final_performance.csv` | `task,strategy,metric,mean,std_dev,bootstrap_std,n_successful,n_failed` |
//! | `result.json` | the full [`ExperimentResult`], `schema_version` 1 |
//!
//! Plot files are not produced.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::Direction;

use super::metrics::{aggregate_z, AggregateZ, TaskScores};
use super::{ExperimentResult, SCHEMA_VERSION};

pub const QUANTILES_FILE: &str = "regret_quantiles.csv";
pub const ENCOUNTER_FILE: &str = "first_encounter.csv";
pub const FINAL_FILE: &str = "final_performance.csv";
pub const RESULT_FILE: &str = "result.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFiles {
    pub quantiles: PathBuf,
    pub first_encounter: PathBuf,
    pub final_table: PathBuf,
    pub json: PathBuf,
}

const FINAL_HEADER: [&str; 8] = ["task", "strategy", "metric", "mean", "std_dev", "bootstrap_std", "n_successful", "n_failed"];

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn final_row(r: &ExperimentResult) -> Vec<String> {
    let s = r.summary.final_stats.as_ref();
    vec![
        r.objective.name.clone(),
        r.strategy.clone(),
        r.summary.metric.clone(),
        opt(s.map(|s| s.mean)),
        opt(s.map(|s| s.std)),
        opt(s.map(|s| s.bootstrap_std)),
        r.repeats.len().to_string(),
        r.failures.len().to_string(),
    ]
}

/// Writes the final-performance table for one or more results.
pub fn write_final_table(results: &[&ExperimentResult], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(FINAL_HEADER)?;
    for r in results {
        w.write_record(final_row(r))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes the four artifacts of `result` into `dir`, creating it if needed.
pub fn emit_outputs(result: &ExperimentResult, dir: &Path) -> Result<OutputFiles> {
    fs::create_dir_all(dir)?;
    let files = OutputFiles {
        quantiles: dir.join(QUANTILES_FILE),
        first_encounter: dir.join(ENCOUNTER_FILE),
        final_table: dir.join(FINAL_FILE),
        json: dir.join(RESULT_FILE),
    };

    let mut w = csv::Writer::from_path(&files.quantiles)?;
    w.write_record([
        "epoch",
        "metric",
        "n",
        "mean",
        "std_across_repeats",
        "bootstrap_std_of_mean",
        "q10",
        "q25",
        "q50",
        "q75",
        "q90",
    ])?;
    for e in &result.summary.epochs {
        let mut row = vec![e.epoch.to_string(), result.summary.metric.clone()];
        match &e.stats {
            Some(s) => {
                row.extend([s.n.to_string(), s.mean.to_string(), s.std.to_string(), s.bootstrap_std.to_string()]);
                row.extend(s.quantiles.iter().map(|q| q.to_string()));
            }
            None => row.extend(std::iter::once("0".to_string()).chain(std::iter::repeat_n(String::new(), 8))),
        }
        w.write_record(&row)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(&files.first_encounter)?;
    w.write_record(["tolerance", "epoch", "count"])?;
    if let (Some(times), Some(tol)) = (&result.summary.first_encounter, result.encounter_tol) {
        let n_epochs = result.config.n_epochs;
        let mut counts = vec![0usize; n_epochs + 1];
        let mut never = 0;
        for t in times {
            match t {
                Some(t) => counts[*t] += 1,
                None => never += 1,
            }
        }
        for (t, c) in counts.iter().enumerate() {
            w.write_record([tol.to_string(), t.to_string(), c.to_string()])?;
        }
        w.write_record([tol.to_string(), "never".into(), never.to_string()])?;
    }
    w.flush()?;

    write_final_table(&[result], &files.final_table)?;

    let mut out = BufWriter::new(File::create(&files.json)?);
    serde_json::to_writer_pretty(&mut out, result)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(files)
}

/// Reads a `result.json`, or the one inside a directory.
pub fn load_result(path: &Path) -> Result<ExperimentResult> {
    let file = if path.is_dir() { path.join(RESULT_FILE) } else { path.to_path_buf() };
    let result: ExperimentResult = serde_json::from_reader(BufReader::new(File::open(&file)?))?;
    if result.schema_version != SCHEMA_VERSION {
        return Err(Error::Parameter(format!(
            "{}: schema version {} is not supported (expected {SCHEMA_VERSION})",
            file.display(),
            result.schema_version
        )));
    }
    Ok(result)
}

/// Removes every object key containing `wall_seconds`, recursively.
pub fn strip_wall_clock(value: &mut serde_json::Value) {
    match value {
        serde_json::Value::Object(map) => {
            map.retain(|k, _| !k.contains("wall_seconds"));
            map.values_mut().for_each(strip_wall_clock);
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(strip_wall_clock),
        _ => {}
    }
}

/// Groups results by task and ranks the strategies. Scores are final mean
/// regret, or the negated final best value when no optimum is known on a
/// maximisation task, so lower is always better.
pub fn rank_results(results: &[ExperimentResult]) -> Result<(Vec<TaskScores>, AggregateZ)> {
    let mut tasks: BTreeMap<String, TaskScores> = BTreeMap::new();
    for r in results {
        let Some(stats) = &r.summary.final_stats else {
            log::warn!("{} on {} has no successful repeats; skipped", r.strategy, r.objective.name);
            continue;
        };
        let score = match (r.summary.metric.as_str(), r.objective.direction) {
            ("regret", _) | (_, Direction::Minimize) => stats.mean,
            (_, Direction::Maximize) => -stats.mean,
        };
        let task = tasks.entry(r.objective.name.clone()).or_insert_with(|| TaskScores {
            task: r.objective.name.clone(),
            scores: BTreeMap::new(),
        });
        if task.scores.insert(r.strategy.clone(), (score, stats.std)).is_some() {
            return Err(Error::Parameter(format!("duplicate result for {} on {}", r.strategy, r.objective.name)));
        }
    }
    let tasks: Vec<TaskScores> = tasks.into_values().collect();
    let agg = aggregate_z(&tasks)?;
    Ok((tasks, agg))
}

/// `strategy,performance_z,variance_z`
pub fn write_rank_table(agg: &AggregateZ, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["strategy", "performance_z", "variance_z"])?;
    for row in &agg.rows {
        w.write_record([row.strategy.clone(), row.performance.to_string(), row.variance.to_string()])?;
    }
    w.flush()?;
    Ok(())
}
