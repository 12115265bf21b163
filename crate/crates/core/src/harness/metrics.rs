//! Summary statistics, first-encounter times and normalised rankings.

use std::collections::BTreeMap;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

use super::{ExperimentResult, RepeatRecord};

pub const BOOTSTRAP_RESAMPLES: usize = 1000;
pub const QUANTILES: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 0.9];

/// Mean of `v`.
pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation (n − 1); zero for fewer than two values.
pub fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

/// Linear-interpolation quantile of a sorted slice.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Standard deviation of the mean over `BOOTSTRAP_RESAMPLES` resamples.
pub fn bootstrap_std(v: &[f64], seed: u64) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let mut rng = rng::rng_from(seed);
    let means: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .map(|_| (0..v.len()).map(|_| v[rng.random_range(0..v.len())]).sum::<f64>() / v.len() as f64)
        .collect();
    let m = mean(&means);
    (means.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / means.len() as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub n: usize,
    pub mean: f64,
    /// Across repeats.
    pub std: f64,
    /// Of the mean.
    pub bootstrap_std: f64,
    pub quantiles: Vec<f64>,
}

impl Stats {
    fn of(values: &[f64], seed: u64) -> Option<Stats> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(Stats {
            n: values.len(),
            mean: mean(values),
            std: std_dev(values),
            bootstrap_std: bootstrap_std(values, seed),
            quantiles: QUANTILES.iter().map(|&q| quantile_sorted(&sorted, q)).collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochSummary {
    pub epoch: usize,
    pub stats: Option<Stats>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_successful: usize,
    /// `regret` when the objective has a known optimum, else `best-value`.
    pub metric: String,
    /// Per-epoch statistics of the metric, epochs 1..=N.
    pub epochs: Vec<EpochSummary>,
    pub final_stats: Option<Stats>,
    /// First-encounter epoch per successful repeat; `None` means never.
    pub first_encounter: Option<Vec<Option<usize>>>,
    pub mean_epoch_wall_seconds: Option<f64>,
}

fn metric_series(r: &RepeatRecord) -> Vec<f64> {
    match r.regret_series() {
        Some(s) => s,
        None => {
            let mut out = vec![r.initial_best.unwrap_or(f64::NAN)];
            out.extend(r.epochs.iter().map(|e| e.best_so_far));
            out
        }
    }
}

impl Summary {
    pub fn compute(repeats: &[RepeatRecord], n_epochs: usize, encounter_tol: Option<f64>, seed: u64) -> Summary {
        let has_regret = repeats.first().is_some_and(|r| r.initial_regret.is_some());
        let series: Vec<Vec<f64>> = repeats.iter().map(metric_series).collect();
        let epochs = (1..=n_epochs)
            .map(|t| {
                let vals: Vec<f64> = series.iter().filter_map(|s| s.get(t).copied()).collect();
                EpochSummary {
                    epoch: t,
                    stats: Stats::of(&vals, rng::derive_seed(seed, &[0xB007, t as u64])),
                }
            })
            .collect();
        let finals: Vec<f64> = series.iter().filter_map(|s| s.last().copied()).collect();
        let first_encounter = match (has_regret, encounter_tol) {
            (true, Some(tol)) => Some(series.iter().map(|s| first_encounter_series(s, tol)).collect()),
            _ => None,
        };
        let walls: Vec<f64> = repeats.iter().flat_map(|r| r.epochs.iter().map(|e| e.wall_seconds)).collect();
        Summary {
            n_successful: repeats.len(),
            metric: if has_regret { "regret" } else { "best-value" }.into(),
            epochs,
            // same resampling stream as the last epoch row, so the two agree
            final_stats: Stats::of(&finals, rng::derive_seed(seed, &[0xB007, n_epochs as u64])),
            first_encounter,
            mean_epoch_wall_seconds: (!walls.is_empty()).then(|| mean(&walls)),
        }
    }
}

/// Smallest index whose regret is at most `tol`; index 0 is the initial
/// design.
pub fn first_encounter_series(regrets: &[f64], tol: f64) -> Option<usize> {
    regrets.iter().position(|&r| r <= tol)
}

/// First-encounter epoch of every successful repeat.
pub fn first_encounter(result: &ExperimentResult, tol: f64) -> Result<Vec<Option<usize>>> {
    if result.objective.known_optimum.is_none() {
        return Err(Error::MetricUnavailable(format!(
            "first-encounter time needs a known optimum; `{}` has none",
            result.objective.name
        )));
    }
    result
        .repeats
        .iter()
        .map(|r| {
            r.regret_series()
                .map(|s| first_encounter_series(&s, tol))
                .ok_or_else(|| Error::MetricUnavailable(format!("repeat {} has no regret series", r.repeat)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZScores {
    pub values: Vec<(String, f64)>,
    /// All scores were equal; every Z is zero.
    pub degenerate: bool,
}

/// `Z = (s − s_min) / (s_max − s_min)` with lower scores better.
pub fn z_score(scores: &[(String, f64)]) -> Result<ZScores> {
    if scores.len() < 2 {
        return Err(Error::Parameter("Z scores need at least two strategies".into()));
    }
    if let Some((name, _)) = scores.iter().find(|(_, s)| !s.is_finite()) {
        return Err(Error::Parameter(format!("score of `{name}` is not finite")));
    }
    let lo = scores.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let hi = scores.iter().map(|s| s.1).fold(f64::NEG_INFINITY, f64::max);
    let degenerate = hi == lo;
    let values = scores
        .iter()
        .map(|(n, s)| (n.clone(), if degenerate { 0.0 } else { (s - lo) / (hi - lo) }))
        .collect();
    Ok(ZScores { values, degenerate })
}

/// Final score and spread of each strategy on one task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskScores {
    pub task: String,
    /// strategy -> (score, std dev); lower is better for both.
    pub scores: BTreeMap<String, (f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub strategy: String,
    pub performance: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateZ {
    pub rows: Vec<AggregateRow>,
    /// Strategies missing from at least one task.
    pub excluded: Vec<String>,
    /// Tasks whose score or spread channel had all-equal values.
    pub degenerate_tasks: Vec<String>,
}

/// Mean per-task Z of each strategy, separately for the score and spread
/// channels. Strategies not scored on every task are excluded with a warning.
pub fn aggregate_z(tasks: &[TaskScores]) -> Result<AggregateZ> {
    if tasks.is_empty() {
        return Err(Error::Parameter("aggregate Z needs at least one task".into()));
    }
    let mut all: Vec<String> = tasks.iter().flat_map(|t| t.scores.keys().cloned()).collect();
    all.sort();
    all.dedup();
    let (included, excluded): (Vec<String>, Vec<String>) =
        all.into_iter().partition(|s| tasks.iter().all(|t| t.scores.contains_key(s)));
    for s in &excluded {
        log::warn!("strategy `{s}` is missing from some tasks and is excluded from the ranking");
    }

    let mut perf = vec![0.0; included.len()];
    let mut var = vec![0.0; included.len()];
    let mut degenerate_tasks = Vec::new();
    for t in tasks {
        let channel = |pick: fn(&(f64, f64)) -> f64| {
            let scores: Vec<(String, f64)> = included.iter().map(|s| (s.clone(), pick(&t.scores[s]))).collect();
            z_score(&scores)
        };
        let zp = channel(|p| p.0)?;
        let zv = channel(|p| p.1)?;
        if zp.degenerate || zv.degenerate {
            degenerate_tasks.push(t.task.clone());
        }
        for i in 0..included.len() {
            perf[i] += zp.values[i].1;
            var[i] += zv.values[i].1;
        }
    }
    let n = tasks.len() as f64;
    let rows = included
        .into_iter()
        .enumerate()
        .map(|(i, strategy)| AggregateRow {
            strategy,
            performance: perf[i] / n,
            variance: var[i] / n,
        })
        .collect();
    Ok(AggregateZ {
        rows,
        excluded,
        degenerate_tasks,
    })
}
