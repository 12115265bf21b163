//! Batch construction.
//!
//! Every strategy maps a fitted posterior, the observed data and the domain to
//! exactly `k` points:
//!
//! - [`kmbbo_batch`]: K-means centroids of slice samples drawn under the EI
//!   surface.
//! - [`naive_qei_batch`]: the `k` best EI values on a candidate set.
//! - [`thompson_batch`]: argmax of `k` joint posterior draws.
//! - [`constant_liar_batch`]: greedy EI maximisation, refitting on the mean
//!   observed value after every pick.
//! - [`lp_batch`]: greedy maximisation of EI times soft local penalisers.
//!
//! Ties are always broken towards the lowest index.

mod baselines;
mod kmbbo;
pub mod kmeans;

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

pub use baselines::{constant_liar_batch, lipschitz_estimate, lp_batch, naive_qei_batch, soft_penalizer, thompson_batch};
pub use kmbbo::{kmbbo_batch, kmbbo_centroids, snap_to_candidates, KmbboDraw};
pub use kmeans::{kmeans_fit, KMeansResult};

use crate::acquisition::{expected_improvement, AcquisitionContext};
use crate::objective::{Dataset, Domain};
use crate::optimize::{self, AscentOptions};
use crate::rng;

/// Default candidate-set size for grid-based strategies on continuous domains.
pub const DEFAULT_GRID: usize = 2000;
/// Starts used when maximising an acquisition on a continuous domain.
pub const ASCENT_STARTS: usize = 20;
const SCREEN_POINTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Centroid,
    TopQ,
    PosteriorDraw,
    LiarStep,
    PenalizedArgmax,
    /// Padding drawn when a strategy could not supply enough distinct points.
    Filler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Batch {
    pub points: Vec<Vec<f64>>,
    pub strategy: String,
    pub provenance: Vec<Provenance>,
    pub snapped: Vec<bool>,
    /// Fallbacks taken while building the batch.
    pub flags: Vec<String>,
}

impl Batch {
    fn new(strategy: &str) -> Self {
        Batch {
            points: Vec::new(),
            strategy: strategy.to_string(),
            provenance: Vec::new(),
            snapped: Vec::new(),
            flags: Vec::new(),
        }
    }

    fn push(&mut self, x: Vec<f64>, provenance: Provenance) {
        self.points.push(x);
        self.provenance.push(provenance);
        self.snapped.push(false);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Pool row indices already present in `data`.
pub(crate) fn evaluated_rows(domain: &Domain, data: &Dataset) -> HashSet<usize> {
    match domain.candidates() {
        Some(pool) => data.points().iter().filter_map(|p| pool.position(p)).collect(),
        None => HashSet::new(),
    }
}

/// Candidate set for grid strategies: `n_grid` uniform points on a box, or the
/// unevaluated pool rows (returned with their row indices).
pub(crate) fn candidate_set(domain: &Domain, data: &Dataset, n_grid: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    match domain {
        Domain::Continuous { bounds } => {
            let mut rng = rng::stream(seed, &[0x6121D]);
            let pts = optimize::uniform_points(n_grid.max(1), bounds, &mut rng);
            let idx = (0..pts.len()).collect();
            (pts, idx)
        }
        Domain::Discrete(pool) => {
            let done = evaluated_rows(domain, data);
            let idx: Vec<usize> = (0..pool.len()).filter(|i| !done.contains(i)).collect();
            (idx.iter().map(|&i| pool.rows()[i].clone()).collect(), idx)
        }
    }
}

/// Indices of `values` sorted by decreasing value, lowest index first on ties.
pub(crate) fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    order
}

/// Maximises `f` over a continuous box: screen uniform points, then run local
/// ascent from the best `ASCENT_STARTS` of them.
pub(crate) fn maximize_on_box<F>(f: F, bounds: &[(f64, f64)], seed: u64) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let mut rng = rng::stream(seed, &[0x5C4EE]);
    let screen = optimize::uniform_points(SCREEN_POINTS, bounds, &mut rng);
    let vals: Vec<f64> = screen.iter().map(|p| f(p)).collect();
    let starts: Vec<Vec<f64>> = descending_order(&vals)
        .into_iter()
        .take(ASCENT_STARTS)
        .map(|i| screen[i].clone())
        .collect();
    optimize::multistart_maximize(f, &starts, bounds, AscentOptions::default())
}

/// Single-point EI maximiser. On a pool, the best row outside `taken` and the
/// evaluated set.
pub(crate) fn argmax_acquisition<F>(f: F, domain: &Domain, data: &Dataset, taken: &HashSet<usize>, seed: u64) -> Option<(Vec<f64>, Option<usize>)>
where
    F: Fn(&[f64]) -> f64,
{
    match domain {
        Domain::Continuous { bounds } => Some((maximize_on_box(f, bounds, seed).0, None)),
        Domain::Discrete(pool) => {
            let done = evaluated_rows(domain, data);
            let mut best: Option<(usize, f64)> = None;
            for (i, r) in pool.rows().iter().enumerate() {
                if done.contains(&i) || taken.contains(&i) {
                    continue;
                }
                let v = f(r);
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((i, v));
                }
            }
            best.map(|(i, _)| (pool.rows()[i].clone(), Some(i)))
        }
    }
}

/// Plain EI argmax (the `k = 1` case of every sequential strategy).
pub fn ei_argmax(ctx: &AcquisitionContext<'_>, domain: &Domain, data: &Dataset, seed: u64) -> Option<Vec<f64>> {
    argmax_acquisition(|x| expected_improvement(ctx, x), domain, data, &HashSet::new(), seed).map(|r| r.0)
}
