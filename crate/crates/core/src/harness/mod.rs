//! Repeated batch-optimisation experiments.
//!
//! A repeat draws a uniform initial design and then runs `n_epochs` rounds of
//! fit, batch, evaluate, append. Repeat `r` is seeded with `base_seed + r`, so
//! results do not depend on how repeats are scheduled across workers.

pub mod metrics;
pub mod output;

use std::time::Instant;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::compression::{CompressionReport, CsKmbboOptions, CsKmbboPlanner, DEFAULT_CALIBRATION_SAMPLES, DEFAULT_EPSILON};
use crate::error::{Error, Result};
use crate::gp::{self, FitOptions, GpHyperparams};
use crate::objective::{objective_by_name, Dataset, Direction, Domain, Objective, PoolParams};
use crate::rng;
use crate::strategies::{self, Batch, DEFAULT_GRID};

pub use metrics::{
    aggregate_z, first_encounter, first_encounter_series, z_score, AggregateRow, AggregateZ, EpochSummary, Stats, Summary, TaskScores, ZScores,
};
pub use output::{emit_outputs, load_result, OutputFiles};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Kmbbo,
    CsKmbbo,
    Thompson,
    Cl,
    Qei,
    Lp,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 6] = [
        StrategyKind::Kmbbo,
        StrategyKind::CsKmbbo,
        StrategyKind::Thompson,
        StrategyKind::Cl,
        StrategyKind::Qei,
        StrategyKind::Lp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::Kmbbo => "kmbbo",
            StrategyKind::CsKmbbo => "cs-kmbbo",
            StrategyKind::Thompson => "thompson",
            StrategyKind::Cl => "cl",
            StrategyKind::Qei => "qei",
            StrategyKind::Lp => "lp",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown strategy `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub objective: String,
    pub pool: PoolParams,
    pub strategy: StrategyKind,
    pub batch_size: usize,
    pub n_epochs: usize,
    pub n_init: usize,
    pub n_slice: usize,
    pub n_grid: usize,
    pub n_repeats: usize,
    pub base_seed: u64,
    pub gp: FitOptions,
    pub cs_epsilon: f64,
    pub cs_calibration_samples: usize,
    /// Regret tolerance for first-encounter times; `None` picks 1% of the
    /// value range seen by the brute-force oracle.
    pub encounter_tol: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            objective: "branin".into(),
            pool: PoolParams::default(),
            strategy: StrategyKind::Kmbbo,
            batch_size: 8,
            n_epochs: 10,
            n_init: 10,
            n_slice: 200,
            n_grid: DEFAULT_GRID,
            n_repeats: 100,
            base_seed: 42,
            gp: FitOptions::default(),
            cs_epsilon: DEFAULT_EPSILON,
            cs_calibration_samples: DEFAULT_CALIBRATION_SAMPLES,
            encounter_tol: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("batch_size", self.batch_size),
            ("n_epochs", self.n_epochs),
            ("n_init", self.n_init),
            ("n_slice", self.n_slice),
            ("n_grid", self.n_grid),
            ("n_repeats", self.n_repeats),
            ("gp.restarts", self.gp.restarts),
            ("cs_calibration_samples", self.cs_calibration_samples),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Parameter(format!("{name} must be at least 1")));
        }
        if self.n_init < 2 {
            return Err(Error::Parameter("n_init must be at least 2 to fit a surrogate".into()));
        }
        if matches!(self.strategy, StrategyKind::Kmbbo | StrategyKind::CsKmbbo) && self.n_slice < self.batch_size {
            return Err(Error::Parameter("n_slice must be at least batch_size".into()));
        }
        if !(self.cs_epsilon > 0.0 && self.cs_epsilon < 1.0) {
            return Err(Error::Parameter("cs_epsilon must lie in (0, 1)".into()));
        }
        if let Some(t) = self.encounter_tol {
            if !(t >= 0.0) {
                return Err(Error::Parameter("encounter_tol must be non-negative".into()));
            }
        }
        Ok(())
    }

    pub fn resolve_objective(&self) -> Result<Objective> {
        objective_by_name(&self.objective, self.pool)
    }
}

/// One batch plus the surrogate hyperparameters it was built from.
#[derive(Debug, Clone)]
pub struct Proposal {
    pub batch: Batch,
    pub hyperparams: Option<GpHyperparams>,
}

/// Per-repeat batch builder. Implementations may carry state across epochs
/// (the compression model of CS-KMBBO).
pub trait Planner {
    fn propose(&mut self, data: &Dataset, seed: u64) -> Result<Proposal>;

    fn compression(&self) -> Option<CompressionReport> {
        None
    }
}

/// Builds a fresh [`Planner`] for every repeat.
pub trait StrategyFactory: Sync {
    fn name(&self) -> String;
    fn planner(&self, objective: &Objective, seed: u64) -> Result<Box<dyn Planner>>;
}

/// Fits a GP on the raw data every epoch, then dispatches to one of the
/// uncompressed strategies.
pub struct StandardPlanner {
    pub kind: StrategyKind,
    pub domain: Domain,
    pub batch_size: usize,
    pub n_slice: usize,
    pub n_grid: usize,
    pub gp: FitOptions,
}

impl Planner for StandardPlanner {
    fn propose(&mut self, data: &Dataset, seed: u64) -> Result<Proposal> {
        let started = Instant::now();
        let model = gp::fit(data, &self.domain, self.gp, rng::derive_seed(seed, &[0]))?;
        log::debug!("gp fit on {} points took {:.3}s", data.len(), started.elapsed().as_secs_f64());
        let s = rng::derive_seed(seed, &[1]);
        let (d, k) = (&self.domain, self.batch_size);
        let batch = match self.kind {
            StrategyKind::Kmbbo => strategies::kmbbo_batch(&model, data, d, k, self.n_slice, s)?,
            StrategyKind::Qei => strategies::naive_qei_batch(&model, data, d, k, self.n_grid, s)?,
            StrategyKind::Thompson => strategies::thompson_batch(&model, data, d, k, self.n_grid, s)?,
            StrategyKind::Cl => strategies::constant_liar_batch(&model, data, d, k, s, self.gp.max_iters)?,
            StrategyKind::Lp => strategies::lp_batch(&model, data, d, k, s)?,
            StrategyKind::CsKmbbo => return Err(Error::Parameter("cs-kmbbo needs its own planner".into())),
        };
        Ok(Proposal {
            batch,
            hyperparams: Some(model.hyperparams),
        })
    }
}

impl StrategyFactory for ExperimentConfig {
    fn name(&self) -> String {
        self.strategy.name().into()
    }

    fn planner(&self, objective: &Objective, seed: u64) -> Result<Box<dyn Planner>> {
        Ok(match self.strategy {
            StrategyKind::CsKmbbo => {
                let opts = CsKmbboOptions {
                    batch_size: self.batch_size,
                    n_epochs: self.n_epochs,
                    n_init: self.n_init,
                    n_slice: self.n_slice,
                    epsilon: self.cs_epsilon,
                    n_calibration: self.cs_calibration_samples,
                    gp: self.gp,
                };
                Box::new(CsKmbboPlanner::new(objective, &opts, seed)?)
            }
            kind => Box::new(StandardPlanner {
                kind,
                domain: objective.domain.clone(),
                batch_size: self.batch_size,
                n_slice: self.n_slice,
                n_grid: self.n_grid,
                gp: self.gp,
            }),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub batch: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub best_so_far: f64,
    pub regret: Option<f64>,
    pub wall_seconds: f64,
    pub flags: Vec<String>,
    pub hyperparams: Option<GpHyperparams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatRecord {
    pub repeat: usize,
    pub seed: u64,
    /// Failure reason; `None` for a completed repeat.
    pub failure: Option<String>,
    pub initial_points: Vec<Vec<f64>>,
    pub initial_values: Vec<f64>,
    pub initial_best: Option<f64>,
    pub initial_regret: Option<f64>,
    pub epochs: Vec<EpochRecord>,
    pub compression: Option<CompressionReport>,
}

impl RepeatRecord {
    pub fn succeeded(&self) -> bool {
        self.failure.is_none()
    }

    pub fn final_best(&self) -> Option<f64> {
        self.epochs.last().map_or(self.initial_best, |e| Some(e.best_so_far))
    }

    pub fn final_regret(&self) -> Option<f64> {
        self.epochs.last().map_or(self.initial_regret, |e| e.regret)
    }

    /// Regrets with the initial design at index 0.
    pub fn regret_series(&self) -> Option<Vec<f64>> {
        let mut out = vec![self.initial_regret?];
        for e in &self.epochs {
            out.push(e.regret?);
        }
        Some(out)
    }

    pub fn evaluations(&self) -> usize {
        self.initial_values.len() + self.epochs.iter().map(|e| e.values.len()).sum::<usize>()
    }

    pub fn into_dataset(self, direction: Direction) -> Dataset {
        let mut ds = Dataset::new(direction);
        for (x, y) in self.initial_points.into_iter().zip(self.initial_values) {
            ds.push(x, y);
        }
        for e in self.epochs {
            for (x, y) in e.batch.into_iter().zip(e.values) {
                ds.push(x, y);
            }
        }
        ds
    }
}

fn initial_design(domain: &Domain, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let mut rng = rng::stream(seed, &[0x1417]);
    match domain {
        Domain::Continuous { .. } => Ok((0..n).map(|_| domain.sample_uniform(&mut rng)).collect()),
        Domain::Discrete(pool) => {
            if pool.len() < n {
                return Err(Error::PoolExhausted {
                    needed: n,
                    available: pool.len(),
                });
            }
            Ok(index::sample(&mut rng, pool.len(), n)
                .into_iter()
                .map(|i| pool.rows()[i].clone())
                .collect())
        }
    }
}

/// Runs one repeat with `planner` and returns its record. Strategy errors end
/// the repeat early and are stored as its failure reason; only errors in the
/// initial design are returned as `Err`.
pub fn run_repeat(objective: &Objective, planner: &mut dyn Planner, n_init: usize, n_epochs: usize, seed: u64) -> Result<RepeatRecord> {
    let init = initial_design(&objective.domain, n_init, seed)?;
    let mut data = Dataset::new(objective.direction);
    let mut initial_values = Vec::with_capacity(n_init);
    for x in &init {
        let y = objective.eval(x)?;
        initial_values.push(y);
        data.push(x.clone(), y);
    }
    let initial_best = data.best_value().expect("non-empty design");
    let mut record = RepeatRecord {
        repeat: 0,
        seed,
        failure: None,
        initial_points: init,
        initial_values,
        initial_best: Some(initial_best),
        initial_regret: objective.regret(initial_best),
        epochs: Vec::with_capacity(n_epochs),
        compression: planner.compression(),
    };

    for epoch in 1..=n_epochs {
        let started = Instant::now();
        let outcome = planner
            .propose(&data, rng::derive_seed(seed, &[0xE90C, epoch as u64]))
            .and_then(|p| {
                let values = p
                    .batch
                    .points
                    .iter()
                    .map(|x| objective.eval(x))
                    .collect::<Result<Vec<f64>>>()?;
                Ok((p, values))
            });
        let (proposal, values) = match outcome {
            Ok(v) => v,
            Err(e) => {
                record.failure = Some(format!("epoch {epoch}: {e}"));
                break;
            }
        };
        for (x, y) in proposal.batch.points.iter().zip(&values) {
            data.push(x.clone(), *y);
        }
        let best = data.best_value().unwrap();
        record.epochs.push(EpochRecord {
            epoch,
            batch: proposal.batch.points,
            values,
            best_so_far: best,
            regret: objective.regret(best),
            wall_seconds: started.elapsed().as_secs_f64().max(f64::MIN_POSITIVE),
            flags: proposal.batch.flags,
            hyperparams: proposal.hyperparams,
        });
    }
    if record.compression.is_none() {
        record.compression = planner.compression();
    }
    Ok(record)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveInfo {
    pub name: String,
    pub dim: usize,
    pub direction: Direction,
    pub known_optimum: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub schema_version: u32,
    pub strategy: String,
    pub config: ExperimentConfig,
    pub objective: ObjectiveInfo,
    pub encounter_tol: Option<f64>,
    /// Completed repeats, in repeat order.
    pub repeats: Vec<RepeatRecord>,
    /// Failed repeats with their reasons and any epochs completed before the
    /// failure. Never dropped.
    pub failures: Vec<RepeatRecord>,
    pub summary: Summary,
}

impl ExperimentResult {
    pub fn n_repeats(&self) -> usize {
        self.repeats.len() + self.failures.len()
    }
}

/// Default first-encounter tolerance: 1% of the value range the brute-force
/// oracle sees.
pub fn default_encounter_tol(objective: &Objective, seed: u64) -> Result<f64> {
    let report = crate::objective::brute_force_oracle(objective, 100_000, seed)?;
    Ok(1e-2 * report.value_range)
}

/// Runs every repeat of `cfg` with the built-in strategies.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize) -> Result<ExperimentResult> {
    cfg.validate()?;
    let objective = cfg.resolve_objective()?;
    run_experiment_with(cfg, &objective, cfg, jobs)
}

/// Runs every repeat of `cfg` on `objective` with planners from `factory`,
/// using up to `jobs` worker threads.
pub fn run_experiment_with(cfg: &ExperimentConfig, objective: &Objective, factory: &dyn StrategyFactory, jobs: usize) -> Result<ExperimentResult> {
    let encounter_tol = match (cfg.encounter_tol, objective.known_optimum) {
        (Some(t), _) => Some(t),
        (None, Some(_)) => Some(default_encounter_tol(objective, cfg.base_seed)?),
        (None, None) => None,
    };
    let run_one = |r: usize| -> Result<RepeatRecord> {
        let seed = cfg.base_seed.wrapping_add(r as u64);
        let mut record = match factory.planner(objective, seed) {
            Ok(mut planner) => run_repeat(objective, planner.as_mut(), cfg.n_init, cfg.n_epochs, seed)?,
            Err(e) => RepeatRecord {
                repeat: r,
                seed,
                failure: Some(format!("setup: {e}")),
                initial_points: Vec::new(),
                initial_values: Vec::new(),
                initial_best: None,
                initial_regret: None,
                epochs: Vec::new(),
                compression: None,
            },
        };
        record.repeat = r;
        let dir = objective.direction;
        let mut prev = record.initial_best;
        for e in &record.epochs {
            if prev.is_some_and(|p| dir.better(p, e.best_so_far)) {
                return Err(Error::Divergence(format!("repeat {r}: best-so-far regressed at epoch {}", e.epoch)));
            }
            prev = Some(e.best_so_far);
        }
        if record.succeeded() {
            if let Some(bad) = record.epochs.iter().find(|e| e.batch.len() != cfg.batch_size) {
                record.failure = Some(format!(
                    "epoch {}: batch of {} points, expected {}",
                    bad.epoch,
                    bad.batch.len(),
                    cfg.batch_size
                ));
            }
        }
        Ok(record)
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Parameter(e.to_string()))?;
    let all: Vec<RepeatRecord> = pool.install(|| (0..cfg.n_repeats).into_par_iter().map(run_one).collect::<Result<Vec<_>>>())?;

    let (repeats, failures): (Vec<_>, Vec<_>) = all.into_iter().partition(|r| r.succeeded());
    for r in &failures {
        log::warn!("repeat {} failed: {}", r.repeat, r.failure.as_deref().unwrap_or(""));
    }
    let summary = Summary::compute(&repeats, cfg.n_epochs, encounter_tol, cfg.base_seed);
    Ok(ExperimentResult {
        schema_version: SCHEMA_VERSION,
        strategy: factory.name(),
        config: cfg.clone(),
        objective: ObjectiveInfo {
            name: objective.name.clone(),
            dim: objective.dim(),
            direction: objective.direction,
            known_optimum: objective.known_optimum,
        },
        encounter_tol,
        repeats,
        failures,
        summary,
    })
}
