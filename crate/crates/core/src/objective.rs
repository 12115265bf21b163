//! Black-box objectives, search domains and observation datasets.
//!
//! # Benchmark constants
//!
//! | function      | domain                 | optimum (min)          | minimisers                                   |
//! |---------------|------------------------|------------------------|----------------------------------------------|
//! | Branin-Hoo    | [-5,10] x [0,15]       | 0.397887357729738      | (-pi, 12.275), (pi, 2.275), (9.42478, 2.475) |
//! | six-hump camel| [-3,3] x [-2,2]        | -1.031628453489877     | (0.0898, -0.7126), (-0.0898, 0.7126)         |
//! | Hartmann-6    | [0,1]^6                | -3.322368011415515     | (0.20169, 0.150011, 0.476874, 0.275332, 0.311652, 0.6573) |
//!
//! Branin uses a=1, b=5.1/(4 pi^2), c=5/pi, r=6, s=10, t=1/(8 pi). The
//! Hartmann-6 `A`, `P` and `alpha` tables are listed next to [`eval_hartmann6`].

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::{self, AscentOptions};
use crate::rng::{self, Rng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Maximize,
    Minimize,
}

impl Direction {
    /// Multiplier taking native values to the maximisation convention.
    pub fn sign(self) -> f64 {
        match self {
            Direction::Maximize => 1.0,
            Direction::Minimize => -1.0,
        }
    }

    /// Whether `a` is strictly better than `b`.
    pub fn better(self, a: f64, b: f64) -> bool {
        match self {
            Direction::Maximize => a > b,
            Direction::Minimize => a < b,
        }
    }
}

/// Discrete candidate matrix with a row lookup table.
#[derive(Debug)]
pub struct CandidatePool {
    rows: Vec<Vec<f64>>,
    index: HashMap<Vec<u64>, usize>,
    dim: usize,
}

fn row_key(x: &[f64]) -> Vec<u64> {
    // +0.0 and -0.0 must collide
    x.iter().map(|v| (v + 0.0).to_bits()).collect()
}

impl CandidatePool {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::Parameter("candidate pool is empty".into()))?;
        if dim == 0 {
            return Err(Error::Parameter("candidate rows have zero length".into()));
        }
        let mut index = HashMap::with_capacity(rows.len());
        for (i, r) in rows.iter().enumerate() {
            if r.len() != dim {
                return Err(Error::shape(dim, r.len()));
            }
            if index.insert(row_key(r), i).is_some() {
                return Err(Error::Parameter(format!("duplicate candidate row {i}")));
            }
        }
        Ok(CandidatePool { rows, index, dim })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn position(&self, x: &[f64]) -> Option<usize> {
        self.index.get(&row_key(x)).copied()
    }
}

/// The space being searched.
#[derive(Debug, Clone)]
pub enum Domain {
    Continuous { bounds: Vec<(f64, f64)> },
    Discrete(Arc<CandidatePool>),
}

impl Domain {
    pub fn continuous(bounds: Vec<(f64, f64)>) -> Result<Self> {
        if bounds.is_empty() {
            return Err(Error::Parameter("domain has no dimensions".into()));
        }
        for (i, &(lo, hi)) in bounds.iter().enumerate() {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(Error::Parameter(format!("bad bounds ({lo}, {hi}) in dimension {i}")));
            }
        }
        Ok(Domain::Continuous { bounds })
    }

    pub fn discrete(rows: Vec<Vec<f64>>) -> Result<Self> {
        Ok(Domain::Discrete(Arc::new(CandidatePool::new(rows)?)))
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Continuous { bounds } => bounds.len(),
            Domain::Discrete(pool) => pool.dim,
        }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, Domain::Discrete(_))
    }

    pub fn candidates(&self) -> Option<&CandidatePool> {
        match self {
            Domain::Discrete(pool) => Some(pool),
            Domain::Continuous { .. } => None,
        }
    }

    /// Box bounds, or the bounding box of the candidate rows. Degenerate
    /// candidate dimensions are widened to unit width.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        match self {
            Domain::Continuous { bounds } => bounds.clone(),
            Domain::Discrete(pool) => (0..pool.dim)
                .map(|j| {
                    let (lo, hi) = pool
                        .rows
                        .iter()
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r[j]), hi.max(r[j])));
                    if hi > lo {
                        (lo, hi)
                    } else {
                        (lo - 0.5, lo + 0.5)
                    }
                })
                .collect(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            Domain::Continuous { bounds } => x
                .iter()
                .zip(bounds)
                .all(|(&v, &(lo, hi))| v >= lo - 1e-12 && v <= hi + 1e-12),
            Domain::Discrete(pool) => pool.position(x).is_some(),
        }
    }

    pub fn sample_uniform(&self, rng: &mut Rng) -> Vec<f64> {
        match self {
            Domain::Continuous { bounds } => bounds.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect(),
            Domain::Discrete(pool) => pool.rows[rng.random_range(0..pool.len())].clone(),
        }
    }
}

type EvalFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A deterministic black-box function over a [`Domain`].
#[derive(Clone)]
pub struct Objective {
    pub name: String,
    pub domain: Domain,
    pub direction: Direction,
    pub known_optimum: Option<f64>,
    func: Arc<EvalFn>,
}

impl fmt::Debug for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Objective")
            .field("name", &self.name)
            .field("dim", &self.domain.dim())
            .field("direction", &self.direction)
            .field("known_optimum", &self.known_optimum)
            .finish()
    }
}

impl Objective {
    /// Wraps an arbitrary black box. `f` must be deterministic.
    pub fn new<F>(name: impl Into<String>, domain: Domain, direction: Direction, known_optimum: Option<f64>, f: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Objective {
            name: name.into(),
            domain,
            direction,
            known_optimum,
            func: Arc::new(f),
        }
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Native-sign value at `x`.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::shape(self.dim(), x.len()));
        }
        if !self.domain.contains(x) {
            return Err(Error::DomainViolation {
                objective: self.name.clone(),
                point: x.to_vec(),
            });
        }
        Ok((self.func)(x))
    }

    /// `|known_optimum - best|`, when the optimum is known.
    pub fn regret(&self, best: f64) -> Option<f64> {
        self.known_optimum.map(|opt| (opt - best).abs())
    }
}

/// Observed `(x, y)` pairs with best-so-far tracking. Values are stored in the
/// objective's native sign.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Dataset {
    pub direction: Direction,
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    best: Option<usize>,
}

impl Dataset {
    pub fn new(direction: Direction) -> Self {
        Dataset {
            direction,
            points: Vec::new(),
            values: Vec::new(),
            best: None,
        }
    }

    pub fn from_pairs(direction: Direction, points: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::shape(points.len(), values.len()));
        }
        let mut ds = Dataset::new(direction);
        for (x, y) in points.into_iter().zip(values) {
            ds.push(x, y);
        }
        Ok(ds)
    }

    pub fn push(&mut self, x: Vec<f64>, y: f64) {
        self.points.push(x);
        self.values.push(y);
        let i = self.values.len() - 1;
        match self.best {
            Some(b) if !self.direction.better(y, self.values[b]) => {}
            _ => self.best = Some(i),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Values in the maximisation convention.
    pub fn normalized_values(&self) -> Vec<f64> {
        let s = self.direction.sign();
        self.values.iter().map(|v| s * v).collect()
    }

    pub fn best_value(&self) -> Option<f64> {
        self.best.map(|i| self.values[i])
    }

    pub fn best_point(&self) -> Option<&[f64]> {
        self.best.map(|i| self.points[i].as_slice())
    }

    /// Best value in the maximisation convention (the EI incumbent).
    pub fn incumbent(&self) -> Option<f64> {
        self.best_value().map(|v| self.direction.sign() * v)
    }
}

fn check_box(name: &str, x: &[f64], bounds: &[(f64, f64)]) -> Result<()> {
    if x.len() != bounds.len() {
        return Err(Error::shape(bounds.len(), x.len()));
    }
    if x.iter().zip(bounds).any(|(&v, &(lo, hi))| !(v >= lo - 1e-12 && v <= hi + 1e-12)) {
        return Err(Error::DomainViolation {
            objective: name.into(),
            point: x.to_vec(),
        });
    }
    Ok(())
}

pub const BRANIN_BOUNDS: [(f64, f64); 2] = [(-5.0, 10.0), (0.0, 15.0)];
pub const BRANIN_MIN: f64 = 0.397_887_357_729_738;

fn branin_raw(x: &[f64]) -> f64 {
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let t = 1.0 / (8.0 * PI);
    (x[1] - b * x[0] * x[0] + c * x[0] - 6.0).powi(2) + 10.0 * (1.0 - t) * x[0].cos() + 10.0
}

pub fn eval_branin(x: &[f64]) -> Result<f64> {
    check_box("branin", x, &BRANIN_BOUNDS)?;
    Ok(branin_raw(x))
}

pub const CAMEL6_BOUNDS: [(f64, f64); 2] = [(-3.0, 3.0), (-2.0, 2.0)];
pub const CAMEL6_MIN: f64 = -1.031_628_453_489_877;

fn camel6_raw(x: &[f64]) -> f64 {
    let (a, b) = (x[0], x[1]);
    (4.0 - 2.1 * a * a + a.powi(4) / 3.0) * a * a + a * b + (-4.0 + 4.0 * b * b) * b * b
}

pub fn eval_camelback6(x: &[f64]) -> Result<f64> {
    check_box("camel6", x, &CAMEL6_BOUNDS)?;
    Ok(camel6_raw(x))
}

pub const HARTMANN6_MIN: f64 = -3.322_368_011_415_515;

const HARTMANN6_ALPHA: [f64; 4] = [1.0, 1.2, 3.0, 3.2];
const HARTMANN6_A: [[f64; 6]; 4] = [
    [10.0, 3.0, 17.0, 3.5, 1.7, 8.0],
    [0.05, 10.0, 17.0, 0.1, 8.0, 14.0],
    [3.0, 3.5, 1.7, 10.0, 17.0, 8.0],
    [17.0, 8.0, 0.05, 10.0, 0.1, 14.0],
];
// scaled by 1e-4
const HARTMANN6_P: [[f64; 6]; 4] = [
    [1312.0, 1696.0, 5569.0, 124.0, 8283.0, 5886.0],
    [2329.0, 4135.0, 8307.0, 3736.0, 1004.0, 9991.0],
    [2348.0, 1451.0, 3522.0, 2883.0, 3047.0, 6650.0],
    [4047.0, 8828.0, 8732.0, 5743.0, 1091.0, 381.0],
];

fn hartmann6_raw(x: &[f64]) -> f64 {
    -(0..4)
        .map(|i| {
            let inner: f64 = (0..6)
                .map(|j| HARTMANN6_A[i][j] * (x[j] - 1e-4 * HARTMANN6_P[i][j]).powi(2))
                .sum();
            HARTMANN6_ALPHA[i] * (-inner).exp()
        })
        .sum::<f64>()
}

pub fn eval_hartmann6(x: &[f64]) -> Result<f64> {
    check_box("hartmann6", x, &[(0.0, 1.0); 6])?;
    Ok(hartmann6_raw(x))
}

pub fn branin() -> Objective {
    Objective::new(
        "branin",
        Domain::continuous(BRANIN_BOUNDS.to_vec()).unwrap(),
        Direction::Minimize,
        Some(BRANIN_MIN),
        branin_raw,
    )
}

pub fn camel6() -> Objective {
    Objective::new(
        "camel6",
        Domain::continuous(CAMEL6_BOUNDS.to_vec()).unwrap(),
        Direction::Minimize,
        Some(CAMEL6_MIN),
        camel6_raw,
    )
}

pub fn hartmann6() -> Objective {
    Objective::new(
        "hartmann6",
        Domain::continuous(vec![(0.0, 1.0); 6]).unwrap(),
        Direction::Minimize,
        Some(HARTMANN6_MIN),
        hartmann6_raw,
    )
}

/// Minimum of -x sin(x) on [0, 11] (at x ~ 7.978666).
pub const XSINX_MIN: f64 = -7.916_727_371_587_782;

/// One-dimensional toy `-x sin(x)` on [0, 11], minimised. Its acquisition
/// surface has several well separated peaks early in a run.
pub fn neg_x_sin_x() -> Objective {
    Objective::new(
        "xsinx",
        Domain::continuous(vec![(0.0, 11.0)]).unwrap(),
        Direction::Minimize,
        Some(XSINX_MIN),
        |x: &[f64]| -x[0] * x[0].sin(),
    )
}

/// Cap on the number of independent latent bits behind a sparse pool.
const POOL_LATENT_BITS: usize = 24;

/// Synthetic discrete candidate pool of binary fingerprints.
///
/// Rows are built from `min(d, 24)` latent bits; every feature copies one
/// latent bit, possibly inverted, so fingerprints are correlated and
/// compressible the way real substructure keys are. The score is
/// `w . T(x)` where `T` permutes and flips bits and `w` has `s_sparse`
/// non-zeros. The direction is maximise and the known optimum is the exact
/// pool maximum.
pub fn make_sparse_pool(n_cand: usize, d: usize, s_sparse: usize, seed: u64) -> Result<Objective> {
    if n_cand == 0 || d == 0 {
        return Err(Error::Parameter("pool needs at least one candidate and one feature".into()));
    }
    if s_sparse == 0 || s_sparse > d {
        return Err(Error::Parameter(format!("sparsity {s_sparse} must lie in 1..={d}")));
    }
    let latent = d.min(POOL_LATENT_BITS);
    if latent < 64 && (n_cand as u128) > (1u128 << latent) {
        return Err(Error::Parameter(format!(
            "{n_cand} distinct candidates do not fit in {latent} latent bits"
        )));
    }

    let mut rng = rng::stream(seed, &[0x5052_4F4F]);
    let source: Vec<usize> = (0..d)
        .map(|j| if j < latent { j } else { rng.random_range(0..latent) })
        .collect();
    let invert: Vec<bool> = (0..d).map(|_| rng.random_bool(0.5)).collect();

    let mut seen = std::collections::HashSet::with_capacity(n_cand);
    let mut rows = Vec::with_capacity(n_cand);
    while rows.len() < n_cand {
        let bits: u64 = rng.random::<u64>() & if latent == 64 { u64::MAX } else { (1u64 << latent) - 1 };
        if !seen.insert(bits) {
            continue;
        }
        rows.push(
            (0..d)
                .map(|j| {
                    let b = (bits >> source[j]) & 1 == 1;
                    if b ^ invert[j] {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect::<Vec<f64>>(),
        );
    }

    let mut perm: Vec<usize> = (0..d).collect();
    perm.shuffle(&mut rng);
    let flip: Vec<bool> = (0..d).map(|_| rng.random_bool(0.5)).collect();
    let mut support: Vec<usize> = (0..d).collect();
    support.shuffle(&mut rng);
    support.truncate(s_sparse);
    support.sort_unstable();
    let mut weights = vec![0.0; d];
    for &j in &support {
        let z: f64 = StandardNormal.sample(&mut rng);
        weights[j] = z.signum() * (0.5 + z.abs());
    }

    let score = move |x: &[f64]| -> f64 {
        weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != 0.0)
            .map(|(j, w)| {
                let bit = x[perm[j]] > 0.5;
                if bit ^ flip[j] {
                    *w
                } else {
                    0.0
                }
            })
            .sum()
    };
    let optimum = rows.iter().map(|r| score(r)).fold(f64::NEG_INFINITY, f64::max);
    Ok(Objective::new(
        "sparse-pool",
        Domain::discrete(rows)?,
        Direction::Maximize,
        Some(optimum),
        score,
    ))
}

/// Parameters for [`make_sparse_pool`] when resolving objectives by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolParams {
    pub size: usize,
    pub dim: usize,
    pub sparsity: usize,
    pub seed: u64,
}

impl Default for PoolParams {
    fn default() -> Self {
        PoolParams {
            size: 19_000,
            dim: 167,
            sparsity: 10,
            seed: 7,
        }
    }
}

pub const OBJECTIVE_NAMES: [&str; 5] = ["branin", "camel6", "hartmann6", "sparse-pool", "xsinx"];

pub fn objective_by_name(name: &str, pool: PoolParams) -> Result<Objective> {
    match name {
        "branin" => Ok(branin()),
        "camel6" | "camelback6" => Ok(camel6()),
        "hartmann6" => Ok(hartmann6()),
        "sparse-pool" => make_sparse_pool(pool.size, pool.dim, pool.sparsity, pool.seed),
        "xsinx" => Ok(neg_x_sin_x()),
        other => Err(Error::Parameter(format!(
            "unknown objective `{other}` (expected one of {})",
            OBJECTIVE_NAMES.join(", ")
        ))),
    }
}

/// Outcome of the brute-force optimum search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleReport {
    pub objective: String,
    pub evaluations: usize,
    pub best_value: f64,
    pub best_point: Vec<f64>,
    pub known_optimum: Option<f64>,
    /// How far the search beat the recorded optimum (positive means the
    /// recorded optimum is wrong). Direction aware.
    pub excess: Option<f64>,
    /// Largest minus smallest value seen by the search.
    pub value_range: f64,
}

/// Random search with `n_random` uniform draws followed by local refinement of
/// the ten best draws. Discrete pools are enumerated exhaustively.
pub fn brute_force_oracle(objective: &Objective, n_random: usize, seed: u64) -> Result<OracleReport> {
    let sign = objective.direction.sign();
    let (best_x, best_y, mut lo, mut hi, evaluations);
    match &objective.domain {
        Domain::Discrete(pool) => {
            let vals: Vec<f64> = pool.rows().iter().map(|r| (objective.func)(r)).collect();
            let mut bi = 0;
            for (i, &v) in vals.iter().enumerate() {
                if objective.direction.better(v, vals[bi]) {
                    bi = i;
                }
            }
            best_x = pool.rows()[bi].clone();
            best_y = vals[bi];
            lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            evaluations = vals.len();
        }
        Domain::Continuous { bounds } => {
            let mut rng = rng::rng_from(seed);
            let pts = optimize::uniform_points(n_random.max(1), bounds, &mut rng);
            let mut scored: Vec<(f64, usize)> = pts
                .iter()
                .enumerate()
                .map(|(i, p)| (sign * (objective.func)(p), i))
                .collect();
            lo = scored.iter().map(|s| sign * s.0).fold(f64::INFINITY, f64::min);
            hi = scored.iter().map(|s| sign * s.0).fold(f64::NEG_INFINITY, f64::max);
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let starts: Vec<Vec<f64>> = scored.iter().take(10).map(|s| pts[s.1].clone()).collect();
            let opts = AscentOptions {
                max_iters: 500,
                ..AscentOptions::default()
            };
            let (x, fx) = optimize::multistart_maximize(|p| sign * (objective.func)(p), &starts, bounds, opts);
            best_x = x;
            best_y = sign * fx;
            lo = lo.min(best_y);
            hi = hi.max(best_y);
            evaluations = pts.len();
        }
    }
    let excess = objective.known_optimum.map(|opt| sign * (best_y - opt));
    Ok(OracleReport {
        objective: objective.name.clone(),
        evaluations,
        best_value: best_y,
        best_point: best_x,
        known_optimum: objective.known_optimum,
        excess,
        value_range: hi - lo,
    })
}
