//! Compressed-sensing front end for CS-KMBBO.
//!
//! Calibration draws `n_comp` points from the domain and learns an orthonormal
//! change of basis from their second-moment matrix. Each calibration point is
//! sparse-coded in that basis with TwIST (L1-regularised least squares), the
//! basis directions are ranked by code energy, and the compressed dimension is
//! the smallest number of leading directions that reconstructs the calibration
//! set within the relative error tolerance. KMBBO then runs on the compressed
//! coordinates and every chosen point is mapped back before evaluation.

use std::collections::HashSet;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::acquisition::AcquisitionContext;
use crate::error::{Error, Result};
use crate::gp::{self, FitOptions};
use crate::harness::{Planner, Proposal};
use crate::objective::{Dataset, Domain, Objective};
use crate::rng;
use crate::strategies::{self, kmbbo_centroids, snap_to_candidates, Batch, Provenance};

pub const DEFAULT_EPSILON: f64 = 0.05;
pub const DEFAULT_CALIBRATION_SAMPLES: usize = 1000;
/// Shrinkage weight relative to `||M^T y||_inf` used for calibration codes.
pub const LAMBDA_FRACTION: f64 = 0.1;
const CODE_ITERS: usize = 500;

/// L1-regularised least squares `1/2 ||y - M x||^2 + lambda ||x||_1` by
/// two-step iterative shrinkage/thresholding.
#[derive(Debug, Clone)]
pub struct TwistSolver {
    map: DMatrix<f64>,
    map_t: DMatrix<f64>,
    /// `||M||_2^2`, the Lipschitz constant of the data-term gradient.
    lipschitz: f64,
    alpha: f64,
    beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwistResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Objective value after every iteration (index 0 is the zero start).
    pub objective_history: Vec<f64>,
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

impl TwistSolver {
    /// Smallest eigenvalue bound of the normalised `M^T M` assumed by the
    /// two-step weights.
    const LAM1: f64 = 1e-4;

    pub fn new(map: DMatrix<f64>) -> Result<Self> {
        if map.nrows() == 0 || map.ncols() == 0 {
            return Err(Error::Parameter("measurement map is empty".into()));
        }
        let sv = map.clone().svd(false, false).singular_values;
        let top = sv.iter().copied().fold(0.0, f64::max);
        if !(top > 0.0) {
            return Err(Error::Parameter("measurement map is zero".into()));
        }
        let lam1 = Self::LAM1;
        let rho0 = (1.0 - lam1) / (1.0 + lam1);
        let alpha = 2.0 / (1.0 + (1.0 - rho0 * rho0).sqrt());
        let beta = alpha * 2.0 / (lam1 + 1.0);
        Ok(TwistSolver {
            map_t: map.transpose(),
            map,
            lipschitz: top * top,
            alpha,
            beta,
        })
    }

    pub fn objective(&self, y: &DVector<f64>, x: &DVector<f64>, lambda: f64) -> f64 {
        0.5 * (y - &self.map * x).norm_squared() + lambda * x.lp_norm(1)
    }

    /// `||M^T y||_inf`, the smallest `lambda` with an all-zero solution.
    pub fn lambda_max(&self, y: &[f64]) -> f64 {
        (&self.map_t * DVector::from_column_slice(y)).amax()
    }

    /// IST step with step size `1 / (scale * L)`.
    fn shrink(&self, y: &DVector<f64>, x: &DVector<f64>, lambda: f64, scale: f64) -> DVector<f64> {
        let step = 1.0 / (scale * self.lipschitz);
        let grad = &self.map_t * (y - &self.map * x);
        let mut out = x + grad * step;
        out.apply(|v| *v = soft_threshold(*v, lambda * step));
        out
    }

    pub fn solve(&self, y: &[f64], lambda: f64, max_iters: usize) -> Result<TwistResult> {
        if y.len() != self.map.nrows() {
            return Err(Error::shape(self.map.nrows(), y.len()));
        }
        if !(lambda > 0.0) {
            return Err(Error::Parameter(format!("lambda must be positive, got {lambda}")));
        }
        let y = DVector::from_column_slice(y);
        let n = self.map.ncols();
        let mut prev = DVector::zeros(n);
        let f0 = self.objective(&y, &prev, lambda);
        let mut history = vec![f0];
        if y.iter().all(|v| *v == 0.0) {
            return Ok(TwistResult {
                x: vec![0.0; n],
                iterations: 0,
                objective_history: history,
            });
        }

        let mut scale = 1.0;
        let mut cur = self.shrink(&y, &prev, lambda, scale);
        let mut f_cur = self.objective(&y, &cur, lambda);
        history.push(f_cur);
        let mut iterations = 1;
        while iterations < max_iters {
            iterations += 1;
            let gamma = self.shrink(&y, &cur, lambda, scale);
            let mut next = &prev * (1.0 - self.alpha) + &cur * (self.alpha - self.beta) + &gamma * self.beta;
            let mut f_next = self.objective(&y, &next, lambda);
            if !(f_next <= f_cur) {
                // monotone variant: fall back to the plain shrinkage step
                next = gamma;
                f_next = self.objective(&y, &next, lambda);
            }
            if !(f_next <= 10.0 * f0) || !f_next.is_finite() {
                if scale < 2.0 {
                    scale *= 2.0;
                    prev = DVector::zeros(n);
                    cur = self.shrink(&y, &prev, lambda, scale);
                    f_cur = self.objective(&y, &cur, lambda);
                    history.push(f_cur);
                    continue;
                }
                return Err(Error::Divergence(format!("TwIST objective {f_next} exceeds ten times the start {f0}")));
            }
            let change = (&next - &cur).norm();
            let size = cur.norm().max(f64::MIN_POSITIVE);
            prev = cur;
            cur = next;
            f_cur = f_next;
            history.push(f_cur);
            if change <= 1e-13 * size {
                break;
            }
        }
        Ok(TwistResult {
            x: cur.iter().copied().collect(),
            iterations,
            objective_history: history,
        })
    }
}

/// One-shot [`TwistSolver`] solve.
pub fn twist_solve(measurements: &[f64], measurement_map: &DMatrix<f64>, lambda: f64, max_iters: usize) -> Result<Vec<f64>> {
    Ok(TwistSolver::new(measurement_map.clone())?.solve(measurements, lambda, max_iters)?.x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionModel {
    pub original_dim: usize,
    pub compressed_dim: usize,
    /// `compressed_dim` orthonormal rows of length `original_dim`.
    pub basis: Vec<Vec<f64>>,
    pub epsilon: f64,
    pub n_comp_samples: usize,
    /// Median count of non-zero code coefficients.
    pub sparsity_estimate: f64,
    /// `sqrt(N) * max |<e_i, p_j>|` between coordinate sensing rows and the
    /// retained basis vectors; ranges from 1 to `sqrt(N)`.
    pub incoherence_estimate: f64,
    /// Mean relative reconstruction error on the calibration set.
    pub calibration_error: f64,
    /// Code energy of every basis direction, in retained order.
    pub energy_spectrum: Vec<f64>,
    /// Tolerance was not reachable and the identity map is used.
    pub identity_fallback: bool,
}

impl CompressionModel {
    pub fn identity(n: usize, epsilon: f64) -> Self {
        CompressionModel {
            original_dim: n,
            compressed_dim: n,
            basis: (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect(),
            epsilon,
            n_comp_samples: 0,
            sparsity_estimate: n as f64,
            incoherence_estimate: (n as f64).sqrt(),
            calibration_error: 0.0,
            energy_spectrum: vec![1.0; n],
            identity_fallback: true,
        }
    }

    /// Measurement bound `C mu^2 S (ln N)^2` for a proportionality constant `C`.
    pub fn measurement_bound(&self, c: f64) -> f64 {
        let ln_n = (self.original_dim as f64).ln();
        c * self.incoherence_estimate.powi(2) * self.sparsity_estimate * ln_n * ln_n
    }

    pub fn report(&self) -> CompressionReport {
        CompressionReport {
            original_dim: self.original_dim,
            compressed_dim: self.compressed_dim,
            sparsity_estimate: self.sparsity_estimate,
            incoherence_estimate: self.incoherence_estimate,
            calibration_error: self.calibration_error,
            energy_spectrum: self.energy_spectrum.clone(),
            identity_fallback: self.identity_fallback,
        }
    }
}

/// Compression summary written to the experiment record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionReport {
    pub original_dim: usize,
    pub compressed_dim: usize,
    pub sparsity_estimate: f64,
    pub incoherence_estimate: f64,
    pub calibration_error: f64,
    pub energy_spectrum: Vec<f64>,
    pub identity_fallback: bool,
}

fn relative_error(x: &[f64], recon: &[f64]) -> f64 {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return 0.0;
    }
    x.iter().zip(recon).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() / norm
}

/// Learns a [`CompressionModel`] from calibration samples (one per row).
pub fn fit_compression(samples: &[Vec<f64>], epsilon: f64) -> Result<CompressionModel> {
    if samples.len() < 2 {
        return Err(Error::Parameter("compression needs at least 2 calibration samples".into()));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::Parameter(format!("epsilon {epsilon} must lie in (0, 1)")));
    }
    let n = samples[0].len();
    if let Some(s) = samples.iter().find(|s| s.len() != n) {
        return Err(Error::shape(n, s.len()));
    }
    let count = samples.len();
    let x = DMatrix::from_fn(count, n, |i, j| samples[i][j]);
    let second_moment = x.tr_mul(&x) / count as f64;
    let eig = SymmetricEigen::new(second_moment);
    // columns of `vectors` are the candidate basis directions
    let vectors = eig.eigenvectors;

    let solver = TwistSolver::new(vectors.clone())?;
    let mut energy = vec![0.0; n];
    let mut nonzeros = Vec::with_capacity(count);
    for s in samples {
        let lmax = solver.lambda_max(s);
        if lmax == 0.0 {
            nonzeros.push(0usize);
            continue;
        }
        let code = solver.solve(s, LAMBDA_FRACTION * lmax, CODE_ITERS)?.x;
        nonzeros.push(code.iter().filter(|c| **c != 0.0).count());
        for (e, c) in energy.iter_mut().zip(&code) {
            *e += c * c;
        }
    }
    nonzeros.sort_unstable();
    let sparsity_estimate = if count % 2 == 1 {
        nonzeros[count / 2] as f64
    } else {
        0.5 * (nonzeros[count / 2 - 1] + nonzeros[count / 2]) as f64
    };

    // projections of every sample on every direction
    let proj = &x * &vectors;
    let proj_energy: Vec<f64> = (0..n).map(|j| proj.column(j).norm_squared()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        energy[b]
            .total_cmp(&energy[a])
            .then(proj_energy[b].total_cmp(&proj_energy[a]))
            .then(a.cmp(&b))
    });

    let sq_norms: Vec<f64> = samples.iter().map(|s| s.iter().map(|v| v * v).sum()).collect();
    let mut captured = vec![0.0; count];
    let mut chosen = None;
    for (m, &j) in order.iter().enumerate() {
        for i in 0..count {
            captured[i] += proj[(i, j)] * proj[(i, j)];
        }
        let err = (0..count)
            .map(|i| {
                if sq_norms[i] == 0.0 {
                    0.0
                } else {
                    ((sq_norms[i] - captured[i]).max(0.0) / sq_norms[i]).sqrt()
                }
            })
            .sum::<f64>()
            / count as f64;
        if err <= epsilon {
            chosen = Some(m + 1);
            break;
        }
    }
    let Some(m) = chosen else {
        let mut model = CompressionModel::identity(n, epsilon);
        model.n_comp_samples = count;
        return Ok(model);
    };

    let basis: Vec<Vec<f64>> = order[..m].iter().map(|&j| vectors.column(j).iter().copied().collect()).collect();
    let incoherence_estimate = (n as f64).sqrt() * basis.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut model = CompressionModel {
        original_dim: n,
        compressed_dim: m,
        basis,
        epsilon,
        n_comp_samples: count,
        sparsity_estimate,
        incoherence_estimate,
        calibration_error: 0.0,
        energy_spectrum: order.iter().map(|&j| energy[j]).collect(),
        identity_fallback: false,
    };
    model.calibration_error = samples
        .iter()
        .map(|s| relative_error(s, &decompress_unchecked(&model, &compress_unchecked(&model, s))))
        .sum::<f64>()
        / count as f64;
    Ok(model)
}

fn compress_unchecked(model: &CompressionModel, x: &[f64]) -> Vec<f64> {
    model.basis.iter().map(|b| b.iter().zip(x).map(|(p, v)| p * v).sum()).collect()
}

fn decompress_unchecked(model: &CompressionModel, z: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; model.original_dim];
    for (b, &c) in model.basis.iter().zip(z) {
        for (o, p) in out.iter_mut().zip(b) {
            *o += c * p;
        }
    }
    out
}

/// `basis . x`.
pub fn compress_point(model: &CompressionModel, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != model.original_dim {
        return Err(Error::shape(model.original_dim, x.len()));
    }
    Ok(compress_unchecked(model, x))
}

/// `basis^T . z`, the least-norm pre-image.
pub fn decompress_point(model: &CompressionModel, z: &[f64]) -> Result<Vec<f64>> {
    if z.len() != model.compressed_dim {
        return Err(Error::shape(model.compressed_dim, z.len()));
    }
    Ok(decompress_unchecked(model, z))
}

/// Calibration draws: uniform points on a box, or distinct pool rows (all of
/// them when the pool is smaller than `n`).
pub fn calibration_samples(domain: &Domain, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng::stream(seed, &[0xCA1]);
    match domain {
        Domain::Continuous { .. } => (0..n).map(|_| domain.sample_uniform(&mut rng)).collect(),
        Domain::Discrete(pool) => {
            if pool.len() <= n {
                return pool.rows().to_vec();
            }
            let mut idx = index::sample(&mut rng, pool.len(), n).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| pool.rows()[i].clone()).collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CsKmbboOptions {
    pub batch_size: usize,
    pub n_epochs: usize,
    pub n_init: usize,
    pub n_slice: usize,
    pub epsilon: f64,
    pub n_calibration: usize,
    pub gp: FitOptions,
}

impl Default for CsKmbboOptions {
    fn default() -> Self {
        CsKmbboOptions {
            batch_size: 8,
            n_epochs: 10,
            n_init: 10,
            n_slice: 200,
            epsilon: DEFAULT_EPSILON,
            n_calibration: DEFAULT_CALIBRATION_SAMPLES,
            gp: FitOptions::default(),
        }
    }
}

pub const CS_KMBBO: &str = "cs-kmbbo";

/// KMBBO in compressed coordinates. Built once per repeat: calibration and
/// basis fitting happen in [`CsKmbboPlanner::new`].
pub struct CsKmbboPlanner {
    model: CompressionModel,
    original: Domain,
    compressed: Domain,
    batch_size: usize,
    n_slice: usize,
    gp: FitOptions,
}

impl CsKmbboPlanner {
    pub fn new(objective: &Objective, opts: &CsKmbboOptions, seed: u64) -> Result<Self> {
        let samples = calibration_samples(&objective.domain, opts.n_calibration, seed);
        let model = fit_compression(&samples, opts.epsilon)?;
        let compressed = match &objective.domain {
            Domain::Discrete(pool) => {
                let mut seen = HashSet::with_capacity(pool.len());
                let rows: Vec<Vec<f64>> = pool
                    .rows()
                    .iter()
                    .map(|r| compress_unchecked(&model, r))
                    .filter(|z| seen.insert(z.iter().map(|v| (v + 0.0).to_bits()).collect::<Vec<u64>>()))
                    .collect();
                Domain::discrete(rows)?
            }
            Domain::Continuous { .. } => {
                let zs: Vec<Vec<f64>> = samples.iter().map(|s| compress_unchecked(&model, s)).collect();
                let bounds = (0..model.compressed_dim)
                    .map(|j| {
                        let lo = zs.iter().map(|z| z[j]).fold(f64::INFINITY, f64::min);
                        let hi = zs.iter().map(|z| z[j]).fold(f64::NEG_INFINITY, f64::max);
                        if hi > lo {
                            (lo, hi)
                        } else {
                            (lo - 0.5, lo + 0.5)
                        }
                    })
                    .collect();
                Domain::continuous(bounds)?
            }
        };
        Ok(CsKmbboPlanner {
            model,
            original: objective.domain.clone(),
            compressed,
            batch_size: opts.batch_size,
            n_slice: opts.n_slice,
            gp: opts.gp,
        })
    }

    pub fn model(&self) -> &CompressionModel {
        &self.model
    }

    pub fn compressed_domain(&self) -> &Domain {
        &self.compressed
    }
}

impl Planner for CsKmbboPlanner {
    fn propose(&mut self, data: &Dataset, seed: u64) -> Result<Proposal> {
        let z: Vec<Vec<f64>> = data.points().iter().map(|p| compress_unchecked(&self.model, p)).collect();
        let gp = gp::fit_values(&z, &data.normalized_values(), &self.compressed, self.gp, rng::derive_seed(seed, &[0]))?;
        let incumbent = data
            .incumbent()
            .ok_or_else(|| Error::Parameter("CS-KMBBO needs at least one observation".into()))?;
        let ctx = AcquisitionContext::new(&gp, incumbent);
        let k = self.batch_size;
        let draw = kmbbo_centroids(&ctx, &self.compressed, k, self.n_slice, rng::derive_seed(seed, &[1]))?;

        let mut batch = Batch {
            points: Vec::with_capacity(k),
            strategy: CS_KMBBO.into(),
            provenance: Vec::with_capacity(k),
            snapped: Vec::with_capacity(k),
            flags: Vec::new(),
        };
        if self.model.identity_fallback {
            batch.flags.push("compression-identity".into());
        }
        if draw.slices.uniform_fallback {
            batch.flags.push("slice-uniform-fallback".into());
        }
        let mut targets: Vec<(Vec<f64>, Provenance)> = draw
            .clusters
            .centroids
            .iter()
            .map(|c| (decompress_unchecked(&self.model, c), Provenance::Centroid))
            .collect();
        if draw.clusters.degenerate {
            batch.flags.push("kmeans-degenerate".into());
            let mut r = rng::stream(seed, &[2]);
            while targets.len() < k {
                targets.push((self.original.sample_uniform(&mut r), Provenance::Filler));
            }
        }

        match &self.original {
            Domain::Continuous { bounds } => {
                for (mut x, prov) in targets {
                    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
                        *v = v.clamp(lo, hi);
                    }
                    batch.points.push(x);
                    batch.provenance.push(prov);
                    batch.snapped.push(false);
                }
            }
            Domain::Discrete(pool) => {
                let points: Vec<Vec<f64>> = targets.iter().map(|t| t.0.clone()).collect();
                let rows = snap_to_candidates(&points, &self.original, &strategies::evaluated_rows(&self.original, data))?;
                for (row, (_, prov)) in rows.into_iter().zip(targets) {
                    batch.points.push(pool.rows()[row].clone());
                    batch.provenance.push(prov);
                    batch.snapped.push(true);
                }
            }
        }
        Ok(Proposal {
            batch,
            hyperparams: Some(gp.hyperparams.clone()),
        })
    }

    fn compression(&self) -> Option<CompressionReport> {
        Some(self.model.report())
    }
}

/// Full CS-KMBBO run: random initial design, compression, then `n_epochs`
/// KMBBO epochs in the compressed space. Returns every observation.
pub fn cs_kmbbo_run(objective: &Objective, opts: &CsKmbboOptions, seed: u64) -> Result<(Dataset, CompressionModel)> {
    let mut planner = CsKmbboPlanner::new(objective, opts, seed)?;
    let record = crate::harness::run_repeat(objective, &mut planner, opts.n_init, opts.n_epochs, seed)?;
    Ok((record.into_dataset(objective.direction), planner.model))
}
