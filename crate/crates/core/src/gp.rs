//! Gaussian process regression with a squared-exponential ARD kernel
//!
//! `k(x, x') = sf * exp(-1/2 * sum_d (x_d - x'_d)^2 / l_d^2)`
//!
//! where `sf` is the signal variance. Hyperparameters are fitted by gradient
//! ascent on the log marginal likelihood in log space, with a backtracking step
//! and several random restarts.
//!
//! [`fit`] rescales inputs to the unit box of the domain and standardises the
//! targets; the reported hyperparameters live in that scaled space and
//! predictions are mapped back. [`GpPosterior::new`] with [`Scaling::identity`]
//! uses raw coordinates and a zero prior mean.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::objective::Domain;
use crate::rng;

/// Smallest diagonal jitter tried when a Gram matrix fails to factor.
pub const JITTER_FLOOR: f64 = 1e-10;
/// Largest jitter before a factorization is declared failed.
pub const JITTER_CEILING: f64 = 1e-4;

// log-space box for the optimiser (scaled inputs, standardised outputs)
const LOG_SF_BOUNDS: (f64, f64) = (-9.21, 9.21); // 1e-4 ..= 1e4
const LOG_LS_BOUNDS: (f64, f64) = (-6.91, 4.61); // 1e-3 ..= 1e2
const LOG_NOISE_BOUNDS: (f64, f64) = (-18.42, 0.0); // 1e-8 ..= 1

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpHyperparams {
    pub signal_variance: f64,
    pub lengthscales: Vec<f64>,
    pub noise_variance: f64,
}

impl GpHyperparams {
    pub fn new(signal_variance: f64, lengthscales: Vec<f64>, noise_variance: f64) -> Result<Self> {
        if !(signal_variance > 0.0) {
            return Err(Error::Parameter(format!("signal variance {signal_variance} must be positive")));
        }
        if lengthscales.is_empty() || lengthscales.iter().any(|&l| !(l > 0.0)) {
            return Err(Error::Parameter("lengthscales must be positive".into()));
        }
        if !(noise_variance >= 0.0) {
            return Err(Error::Parameter(format!("noise variance {noise_variance} must be non-negative")));
        }
        Ok(GpHyperparams {
            signal_variance,
            lengthscales,
            noise_variance: noise_variance.max(JITTER_FLOOR),
        })
    }

    pub fn dim(&self) -> usize {
        self.lengthscales.len()
    }

    fn to_log(&self) -> Vec<f64> {
        let mut t = Vec::with_capacity(self.dim() + 2);
        t.push(self.signal_variance.ln());
        t.extend(self.lengthscales.iter().map(|l| l.ln()));
        t.push(self.noise_variance.ln());
        t
    }

    fn from_log(t: &[f64]) -> Self {
        let d = t.len() - 2;
        GpHyperparams {
            signal_variance: t[0].exp(),
            lengthscales: t[1..=d].iter().map(|v| v.exp()).collect(),
            noise_variance: t[d + 1].exp().max(JITTER_FLOOR),
        }
    }
}

/// Squared-exponential ARD covariance between two points.
pub fn kernel_eval(hp: &GpHyperparams, x: &[f64], x2: &[f64]) -> Result<f64> {
    if x.len() != hp.dim() {
        return Err(Error::shape(hp.dim(), x.len()));
    }
    if x2.len() != hp.dim() {
        return Err(Error::shape(hp.dim(), x2.len()));
    }
    Ok(se_ard(hp.signal_variance, &inv_sq(&hp.lengthscales), x, x2))
}

fn inv_sq(ls: &[f64]) -> Vec<f64> {
    ls.iter().map(|l| 1.0 / (l * l)).collect()
}

#[inline]
fn se_ard(sf: f64, inv_l2: &[f64], x: &[f64], x2: &[f64]) -> f64 {
    let mut r2 = 0.0;
    for j in 0..inv_l2.len() {
        let diff = x[j] - x2[j];
        r2 += diff * diff * inv_l2[j];
    }
    sf * (-0.5 * r2).exp()
}

/// Affine maps between raw inputs/targets and the space the GP lives in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub x_offset: Vec<f64>,
    pub x_scale: Vec<f64>,
    pub y_mean: f64,
    pub y_std: f64,
}

impl Scaling {
    pub fn identity(d: usize) -> Self {
        Scaling {
            x_offset: vec![0.0; d],
            x_scale: vec![1.0; d],
            y_mean: 0.0,
            y_std: 1.0,
        }
    }

    /// Unit box of `domain`, standardised `values`.
    pub fn fitted(domain: &Domain, values: &[f64]) -> Self {
        let bb = domain.bounding_box();
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let std = if var > 1e-24 { var.sqrt() } else { 1.0 };
        Scaling {
            x_offset: bb.iter().map(|b| b.0).collect(),
            x_scale: bb.iter().map(|b| b.1 - b.0).collect(),
            y_mean: mean,
            y_std: std,
        }
    }

    fn scale_x(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.x_offset.iter().zip(&self.x_scale))
            .map(|(v, (o, s))| (v - o) / s)
            .collect()
    }
}

fn factor_with_jitter(mut k: DMatrix<f64>) -> Option<(Cholesky<f64, Dyn>, f64)> {
    if let Some(c) = Cholesky::new(k.clone()) {
        return Some((c, 0.0));
    }
    let n = k.nrows();
    let mut jitter = JITTER_FLOOR;
    let mut applied = 0.0;
    while jitter <= JITTER_CEILING * 1.000_001 {
        for i in 0..n {
            k[(i, i)] += jitter - applied;
        }
        applied = jitter;
        if let Some(c) = Cholesky::new(k.clone()) {
            return Some((c, applied));
        }
        jitter *= 10.0;
    }
    None
}

fn gram(x: &[Vec<f64>], hp: &GpHyperparams) -> DMatrix<f64> {
    let n = x.len();
    let inv_l2 = inv_sq(&hp.lengthscales);
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = hp.signal_variance + hp.noise_variance;
        for j in 0..i {
            let v = se_ard(hp.signal_variance, &inv_l2, &x[i], &x[j]);
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    k
}

const LN_2PI: f64 = 1.837_877_066_409_345_5;

fn lml_from_chol(chol: &Cholesky<f64, Dyn>, y: &DVector<f64>) -> (f64, DVector<f64>) {
    let alpha = chol.solve(y);
    let n = y.len() as f64;
    let logdet_half: f64 = chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum();
    (-0.5 * y.dot(&alpha) - logdet_half - 0.5 * n * LN_2PI, alpha)
}

/// Log marginal likelihood of `y` at inputs `x` (no rescaling applied).
pub fn log_marginal_likelihood(x: &[Vec<f64>], y: &[f64], hp: &GpHyperparams) -> Result<f64> {
    let k = gram(x, hp);
    let (chol, _) = factor_with_jitter(k).ok_or_else(|| Error::FitFailure("Gram matrix not positive definite".into()))?;
    Ok(lml_from_chol(&chol, &DVector::from_column_slice(y)).0)
}

/// Log marginal likelihood and its gradient with respect to
/// `(ln sf, ln l_1, ..., ln l_d, ln noise)`.
pub fn log_marginal_likelihood_grad(x: &[Vec<f64>], y: &[f64], hp: &GpHyperparams) -> Result<(f64, Vec<f64>)> {
    let n = x.len();
    let d = hp.dim();
    let k = gram(x, hp);
    let (chol, _) = factor_with_jitter(k.clone()).ok_or_else(|| Error::FitFailure("Gram matrix not positive definite".into()))?;
    let (lml, alpha) = lml_from_chol(&chol, &DVector::from_column_slice(y));
    let mut w = chol.inverse();
    w.neg_mut();
    w.ger(1.0, &alpha, &alpha, 1.0);

    let inv_l2 = inv_sq(&hp.lengthscales);
    let mut grad = vec![0.0; d + 2];
    let mut trace = 0.0;
    for i in 0..n {
        trace += w[(i, i)];
        // diagonal of the noise-free part contributes to sf only
        grad[0] += 0.5 * w[(i, i)] * hp.signal_variance;
        for j in 0..i {
            let kf = k[(i, j)];
            let wij = w[(i, j)];
            // symmetric pair counted twice, times the 1/2 prefactor
            grad[0] += wij * kf;
            for q in 0..d {
                let diff = x[i][q] - x[j][q];
                grad[q + 1] += wij * kf * diff * diff * inv_l2[q];
            }
        }
    }
    grad[d + 1] = 0.5 * hp.noise_variance * trace;
    Ok((lml, grad))
}

/// Fitted posterior. Immutable after construction.
#[derive(Debug, Clone)]
pub struct GpPosterior {
    pub hyperparams: GpHyperparams,
    pub scaling: Scaling,
    pub log_marginal_likelihood: f64,
    /// Diagonal jitter that was needed on top of the noise variance.
    pub jitter: f64,
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    x_scaled: Vec<Vec<f64>>,
    inv_l2: Vec<f64>,
    chol_l: DMatrix<f64>,
    alpha: DVector<f64>,
}

impl GpPosterior {
    /// Conditions a GP with fixed hyperparameters on `(points, values)`.
    /// `values` are in the maximisation convention.
    pub fn new(points: Vec<Vec<f64>>, values: Vec<f64>, hp: GpHyperparams, scaling: Scaling) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Parameter("GP needs at least one training point".into()));
        }
        if points.len() != values.len() {
            return Err(Error::shape(points.len(), values.len()));
        }
        let d = hp.dim();
        if let Some(p) = points.iter().find(|p| p.len() != d) {
            return Err(Error::shape(d, p.len()));
        }
        if scaling.x_scale.len() != d {
            return Err(Error::shape(d, scaling.x_scale.len()));
        }
        let x_scaled: Vec<Vec<f64>> = points.iter().map(|p| scaling.scale_x(p)).collect();
        let y = DVector::from_iterator(values.len(), values.iter().map(|v| (v - scaling.y_mean) / scaling.y_std));
        let (chol, jitter) = factor_with_jitter(gram(&x_scaled, &hp))
            .ok_or_else(|| Error::FitFailure("Gram matrix not positive definite after jitter escalation".into()))?;
        let (lml, alpha) = lml_from_chol(&chol, &y);
        Ok(GpPosterior {
            inv_l2: inv_sq(&hp.lengthscales),
            hyperparams: hp,
            scaling,
            log_marginal_likelihood: lml,
            jitter,
            points,
            values,
            x_scaled,
            chol_l: chol.unpack(),
            alpha,
        })
    }

    /// Same hyperparameters and scaling, different data.
    pub fn condition_on(&self, points: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self> {
        GpPosterior::new(points, values, self.hyperparams.clone(), self.scaling.clone())
    }

    pub fn dim(&self) -> usize {
        self.hyperparams.dim()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    fn cross_cov(&self, xs: &[f64]) -> DVector<f64> {
        let sf = self.hyperparams.signal_variance;
        DVector::from_iterator(self.x_scaled.len(), self.x_scaled.iter().map(|t| se_ard(sf, &self.inv_l2, xs, t)))
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::shape(self.dim(), x.len()));
        }
        Ok(())
    }

    /// Predictive mean and variance (observation noise included).
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        self.check_dim(x)?;
        Ok(self.predict_unchecked(x))
    }

    pub(crate) fn predict_unchecked(&self, x: &[f64]) -> (f64, f64) {
        let xs = self.scaling.scale_x(x);
        let ks = self.cross_cov(&xs);
        let mean = ks.dot(&self.alpha);
        let v = self.forward_solve(ks);
        let prior = self.hyperparams.signal_variance + self.hyperparams.noise_variance;
        let var = (prior - v.norm_squared()).max(0.0);
        let s = &self.scaling;
        (mean * s.y_std + s.y_mean, var * s.y_std * s.y_std)
    }

    /// Predictive mean only; O(n d).
    pub fn predict_mean(&self, x: &[f64]) -> f64 {
        let xs = self.scaling.scale_x(x);
        let mean = self.cross_cov(&xs).dot(&self.alpha);
        mean * self.scaling.y_std + self.scaling.y_mean
    }

    /// Upper bound on the predictive variance anywhere.
    pub fn prior_variance(&self) -> f64 {
        (self.hyperparams.signal_variance + self.hyperparams.noise_variance) * self.scaling.y_std * self.scaling.y_std
    }

    fn forward_solve(&self, mut b: DVector<f64>) -> DVector<f64> {
        // column-oriented so the inner loop walks contiguous storage
        let n = b.len();
        let l = self.chol_l.as_slice();
        let v = b.as_mut_slice();
        for j in 0..n {
            let col = &l[j * n..(j + 1) * n];
            let bj = v[j] / col[j];
            v[j] = bj;
            for (vi, lij) in v[j + 1..].iter_mut().zip(&col[j + 1..]) {
                *vi -= lij * bj;
            }
        }
        b
    }

    /// Predictive mean and an O(n d) upper bound on the predictive variance:
    /// the variance after conditioning on only the few most correlated
    /// training points, which can only exceed the variance given all of them.
    pub fn predict_mean_variance_bound(&self, x: &[f64]) -> (f64, f64) {
        const NEAREST: usize = 4;
        let xs = self.scaling.scale_x(x);
        let hp = &self.hyperparams;
        let mut mean = 0.0;
        // (k, index), sorted descending
        let mut top = [(0.0f64, usize::MAX); NEAREST];
        for (i, (t, a)) in self.x_scaled.iter().zip(self.alpha.iter()).enumerate() {
            let k = se_ard(hp.signal_variance, &self.inv_l2, &xs, t);
            mean += k * a;
            if k > top[NEAREST - 1].0 {
                let mut pos = NEAREST - 1;
                while pos > 0 && top[pos - 1].0 < k {
                    top[pos] = top[pos - 1];
                    pos -= 1;
                }
                top[pos] = (k, i);
            }
        }
        let m = top.iter().take_while(|t| t.1 != usize::MAX).count();
        let prior = hp.signal_variance + hp.noise_variance;
        // Cholesky of the m x m block, then the quadratic form
        let mut l = [[0.0f64; NEAREST]; NEAREST];
        let mut v = [0.0f64; NEAREST];
        let mut explained = 0.0;
        for r in 0..m {
            for c in 0..=r {
                let mut s = if r == c {
                    prior + self.jitter
                } else {
                    se_ard(hp.signal_variance, &self.inv_l2, &self.x_scaled[top[r].1], &self.x_scaled[top[c].1])
                };
                for j in 0..c {
                    s -= l[r][j] * l[c][j];
                }
                if r == c {
                    if s <= 0.0 {
                        break;
                    }
                    l[r][r] = s.sqrt();
                } else {
                    l[r][c] = s / l[c][c];
                }
            }
            if !(l[r][r] > 0.0) {
                break;
            }
            let mut s = top[r].0;
            for j in 0..r {
                s -= l[r][j] * v[j];
            }
            v[r] = s / l[r][r];
            explained += v[r] * v[r];
        }
        let var = (prior - explained).max(0.0);
        let s = &self.scaling;
        (mean * s.y_std + s.y_mean, var * s.y_std * s.y_std)
    }

    /// Joint posterior mean and covariance (noise on the diagonal) at `points`,
    /// in the scaled output space.
    fn joint(&self, points: &[Vec<f64>]) -> (DVector<f64>, DMatrix<f64>) {
        let m = points.len();
        let n = self.x_scaled.len();
        let xs: Vec<Vec<f64>> = points.iter().map(|p| self.scaling.scale_x(p)).collect();
        let mut kxs = DMatrix::zeros(n, m);
        for (c, p) in xs.iter().enumerate() {
            kxs.set_column(c, &self.cross_cov(p));
        }
        let mean = kxs.tr_mul(&self.alpha);
        let mut v = kxs;
        self.chol_l.solve_lower_triangular_mut(&mut v);
        let hp = &self.hyperparams;
        let mut cov = gram(&xs, hp);
        cov.gemm_tr(-1.0, &v, &v, 1.0);
        // restore exact symmetry after the rank update
        for i in 0..m {
            for j in 0..i {
                let s = 0.5 * (cov[(i, j)] + cov[(j, i)]);
                cov[(i, j)] = s;
                cov[(j, i)] = s;
            }
        }
        (mean, cov)
    }
}

/// Factored joint posterior over a fixed point set; draws are cheap once built.
#[derive(Debug, Clone)]
pub struct PosteriorSampler {
    mean: DVector<f64>,
    chol_l: DMatrix<f64>,
    y_mean: f64,
    y_std: f64,
}

impl PosteriorSampler {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn draw(&self, rng: &mut rng::Rng) -> Vec<f64> {
        let m = self.mean.len();
        let z = DVector::from_iterator(m, (0..m).map(|_| rng.sample::<f64, _>(StandardNormal)));
        let draw = &self.mean + &self.chol_l * z;
        draw.iter().map(|v| v * self.y_std + self.y_mean).collect()
    }
}

impl GpPosterior {
    pub fn joint_sampler(&self, points: &[Vec<f64>]) -> Result<PosteriorSampler> {
        if points.is_empty() {
            return Err(Error::Parameter("no points to sample at".into()));
        }
        for p in points {
            self.check_dim(p)?;
        }
        let (mean, cov) = self.joint(points);
        let (chol, _) = factor_with_jitter(cov)
            .ok_or_else(|| Error::Sampling("posterior covariance not positive definite after jitter escalation".into()))?;
        Ok(PosteriorSampler {
            mean,
            chol_l: chol.unpack(),
            y_mean: self.scaling.y_mean,
            y_std: self.scaling.y_std,
        })
    }
}

/// `n_draws` joint draws from the posterior at `points`. Row `r` holds draw `r`.
pub fn sample_posterior(gp: &GpPosterior, points: &[Vec<f64>], n_draws: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let sampler = gp.joint_sampler(points)?;
    let mut rng = rng::rng_from(seed);
    Ok((0..n_draws).map(|_| sampler.draw(&mut rng)).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub restarts: usize,
    pub max_iters: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            restarts: 5,
            max_iters: 100,
        }
    }
}

fn clamp_log(t: &mut [f64]) {
    let last = t.len() - 1;
    for (i, v) in t.iter_mut().enumerate() {
        let (lo, hi) = if i == 0 {
            LOG_SF_BOUNDS
        } else if i == last {
            LOG_NOISE_BOUNDS
        } else {
            LOG_LS_BOUNDS
        };
        *v = v.clamp(lo, hi);
    }
}

/// Gradient ascent with backtracking from `start` (log space). Returns the
/// final parameters and their log marginal likelihood.
fn ascend(x: &[Vec<f64>], y: &[f64], start: Vec<f64>, max_iters: usize) -> Option<(Vec<f64>, f64)> {
    let mut theta = start;
    clamp_log(&mut theta);
    let (mut lml, mut grad) = log_marginal_likelihood_grad(x, y, &GpHyperparams::from_log(&theta)).ok()?;
    let mut step = 0.1;
    for _ in 0..max_iters {
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if !(gnorm > 1e-8) {
            break;
        }
        let mut accepted = None;
        while step > 1e-10 {
            let mut cand: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t + step * g / gnorm).collect();
            clamp_log(&mut cand);
            let decrease: f64 = cand.iter().zip(&theta).zip(&grad).map(|((c, t), g)| (c - t) * g).sum();
            if decrease <= 0.0 {
                step *= 0.5;
                continue;
            }
            match log_marginal_likelihood_grad(x, y, &GpHyperparams::from_log(&cand)) {
                Ok((l, g)) if l.is_finite() && l >= lml + 1e-4 * decrease => {
                    accepted = Some((cand, l, g));
                    break;
                }
                _ => step *= 0.5,
            }
        }
        match accepted {
            Some((c, l, g)) => {
                let gain = l - lml;
                theta = c;
                lml = l;
                grad = g;
                step = (step * 2.0).min(2.0);
                if gain < 1e-9 * (1.0 + lml.abs()) {
                    break;
                }
            }
            None => break,
        }
    }
    Some((theta, lml))
}

/// Fits hyperparameters on `(points, values)` (maximisation convention) and
/// returns the best posterior over `opts.restarts` initialisations. The first
/// initialisation is deterministic: lengthscale 1/4 of the domain width,
/// signal variance 1 and noise 1e-6 in the standardised space.
pub fn fit_values(points: &[Vec<f64>], values: &[f64], domain: &Domain, opts: FitOptions, seed: u64) -> Result<GpPosterior> {
    if points.len() < 2 {
        return Err(Error::Parameter(format!("GP fit needs at least 2 points, got {}", points.len())));
    }
    if points.len() != values.len() {
        return Err(Error::shape(points.len(), values.len()));
    }
    let d = domain.dim();
    if let Some(p) = points.iter().find(|p| p.len() != d) {
        return Err(Error::shape(d, p.len()));
    }
    let scaling = Scaling::fitted(domain, values);
    let xs: Vec<Vec<f64>> = points.iter().map(|p| scaling.scale_x(p)).collect();
    let ys: Vec<f64> = values.iter().map(|v| (v - scaling.y_mean) / scaling.y_std).collect();

    let mut rng = rng::stream(seed, &[0x6770]);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for r in 0..opts.restarts.max(1) {
        let start = if r == 0 {
            let mut t = vec![0.0; d + 2];
            for v in &mut t[1..=d] {
                *v = 0.25f64.ln();
            }
            t[d + 1] = 1e-6f64.ln();
            t
        } else {
            let mut t = vec![0.0; d + 2];
            t[0] = rng.random_range(0.3f64.ln()..3.0f64.ln());
            for v in &mut t[1..=d] {
                *v = rng.random_range(0.05f64.ln()..2.0f64.ln());
            }
            t[d + 1] = 1e-6f64.ln();
            t
        };
        if let Some((theta, lml)) = ascend(&xs, &ys, start, opts.max_iters) {
            if best.as_ref().is_none_or(|b| lml > b.1) {
                best = Some((theta, lml));
            }
        }
    }
    let (theta, _) = best.ok_or_else(|| Error::FitFailure("no restart produced a factorable Gram matrix".into()))?;
    GpPosterior::new(points.to_vec(), values.to_vec(), GpHyperparams::from_log(&theta), scaling)
}

/// Refits from `init` (a previous fit's hyperparameters) with a single
/// ascent and no random restarts.
pub fn refit_from(points: &[Vec<f64>], values: &[f64], domain: &Domain, init: &GpHyperparams, max_iters: usize) -> Result<GpPosterior> {
    if points.len() != values.len() {
        return Err(Error::shape(points.len(), values.len()));
    }
    let scaling = Scaling::fitted(domain, values);
    let xs: Vec<Vec<f64>> = points.iter().map(|p| scaling.scale_x(p)).collect();
    let ys: Vec<f64> = values.iter().map(|v| (v - scaling.y_mean) / scaling.y_std).collect();
    let (theta, _) = ascend(&xs, &ys, init.to_log(), max_iters)
        .ok_or_else(|| Error::FitFailure("refit did not produce a factorable Gram matrix".into()))?;
    GpPosterior::new(points.to_vec(), values.to_vec(), GpHyperparams::from_log(&theta), scaling)
}

/// Fits a GP to a dataset. Values are sign-normalised to maximisation.
pub fn fit(data: &crate::objective::Dataset, domain: &Domain, opts: FitOptions, seed: u64) -> Result<GpPosterior> {
    fit_values(data.points(), &data.normalized_values(), domain, opts, seed)
}
