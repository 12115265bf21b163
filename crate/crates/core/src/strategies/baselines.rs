use std::collections::HashSet;

use rand::seq::index;

use crate::acquisition::{ei_surface, expected_improvement, normal_cdf, AcquisitionContext};
use crate::error::{Error, Result};
use crate::gp::{self, GpPosterior};
use crate::objective::{Dataset, Domain};
use crate::rng;

use super::{argmax_acquisition, candidate_set, descending_order, Batch, Provenance, DEFAULT_GRID};

pub const THOMPSON: &str = "thompson";
pub const QEI: &str = "qei";
pub const CONSTANT_LIAR: &str = "cl";
pub const LOCAL_PENALIZATION: &str = "lp";

const MAX_REDRAWS: usize = 10;
const LIPSCHITZ_SAMPLES: usize = 1000;

fn incumbent(data: &Dataset) -> Result<f64> {
    data.incumbent()
        .ok_or_else(|| Error::Parameter("batch construction needs at least one observation".into()))
}

fn require(k: usize, available: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::Parameter("batch size must be at least 1".into()));
    }
    if available < k {
        return Err(Error::PoolExhausted { needed: k, available });
    }
    Ok(())
}

fn round_seed(seed: u64, round: usize) -> u64 {
    if round == 0 {
        seed
    } else {
        rng::derive_seed(seed, &[round as u64])
    }
}

/// Each batch point is the argmax of an independent joint posterior draw over
/// the candidate set. A draw whose argmax is already in the batch is redrawn
/// up to ten times, after which the best untaken point of the last draw is
/// used. Pools larger than `n_grid` are subsampled to `n_grid` rows.
pub fn thompson_batch(gp: &GpPosterior, data: &Dataset, domain: &Domain, k: usize, n_grid: usize, seed: u64) -> Result<Batch> {
    let (mut cands, _) = candidate_set(domain, data, n_grid, seed);
    let mut batch = Batch::new(THOMPSON);
    if domain.is_discrete() && cands.len() > n_grid {
        let mut rng = rng::stream(seed, &[0x7A5]);
        let mut keep = index::sample(&mut rng, cands.len(), n_grid).into_vec();
        keep.sort_unstable();
        cands = keep.into_iter().map(|i| std::mem::take(&mut cands[i])).collect();
        batch.flags.push("thompson-pool-subsampled".into());
    }
    require(k, cands.len())?;

    let sampler = gp.joint_sampler(&cands)?;
    let mut rng = rng::stream(seed, &[0x7D4A]);
    let mut taken = HashSet::with_capacity(k);
    for _ in 0..k {
        let mut draw = sampler.draw(&mut rng);
        let mut pick = descending_order(&draw)[0];
        let mut redraws = 0;
        while taken.contains(&pick) && redraws < MAX_REDRAWS {
            draw = sampler.draw(&mut rng);
            pick = descending_order(&draw)[0];
            redraws += 1;
        }
        if taken.contains(&pick) {
            pick = descending_order(&draw)
                .into_iter()
                .find(|i| !taken.contains(i))
                .expect("candidate count checked");
        }
        taken.insert(pick);
        batch.push(cands[pick].clone(), Provenance::PosteriorDraw);
    }
    Ok(batch)
}

/// The `k` candidates with the highest EI.
pub fn naive_qei_batch(gp: &GpPosterior, data: &Dataset, domain: &Domain, k: usize, n_grid: usize, seed: u64) -> Result<Batch> {
    let ctx = AcquisitionContext::new(gp, incumbent(data)?);
    let (cands, _) = candidate_set(domain, data, n_grid, seed);
    require(k, cands.len())?;
    let ei = ei_surface(&ctx, &cands);
    let mut batch = Batch::new(QEI);
    for i in descending_order(&ei).into_iter().take(k) {
        batch.push(cands[i].clone(), Provenance::TopQ);
    }
    Ok(batch)
}

/// Greedy EI maximisation; after each pick the model is refitted on the data
/// plus every pick so far, all valued at the mean observed value. The real
/// dataset is not modified. `refit_iters` bounds the warm-started
/// hyperparameter ascent of each refit.
pub fn constant_liar_batch(
    gp: &GpPosterior,
    data: &Dataset,
    domain: &Domain,
    k: usize,
    seed: u64,
    refit_iters: usize,
) -> Result<Batch> {
    let best = incumbent(data)?;
    if k == 0 {
        return Err(Error::Parameter("batch size must be at least 1".into()));
    }
    let values = data.normalized_values();
    let lie = values.iter().sum::<f64>() / values.len() as f64;
    let mut points = data.points().to_vec();
    let mut values = values;
    let mut model = gp.clone();
    let mut taken = HashSet::new();
    let mut batch = Batch::new(CONSTANT_LIAR);

    for round in 0..k {
        let ctx = AcquisitionContext::new(&model, best);
        let (x, row) = argmax_acquisition(|p| expected_improvement(&ctx, p), domain, data, &taken, round_seed(seed, round))
            .ok_or(Error::PoolExhausted {
                needed: k,
                available: round,
            })?;
        if let Some(r) = row {
            taken.insert(r);
        }
        batch.push(x.clone(), Provenance::LiarStep);
        if round + 1 == k {
            break;
        }
        points.push(x);
        values.push(lie);
        model = gp::refit_from(&points, &values, domain, &model.hyperparams, refit_iters).map_err(|e| Error::StrategyFailure {
            strategy: CONSTANT_LIAR.into(),
            reason: e.to_string(),
        })?;
    }
    Ok(batch)
}

/// Largest predictive-mean gradient norm over 1000 domain samples, with
/// central differences of step `1e-5` times each dimension's width.
pub fn lipschitz_estimate(gp: &GpPosterior, domain: &Domain, seed: u64) -> f64 {
    let bounds = domain.bounding_box();
    let mut rng = rng::stream(seed, &[0x1195]);
    let mut best: f64 = 0.0;
    let mut probe = vec![0.0; bounds.len()];
    for _ in 0..LIPSCHITZ_SAMPLES {
        let x = domain.sample_uniform(&mut rng);
        let mut g2 = 0.0;
        for (j, &(lo, hi)) in bounds.iter().enumerate() {
            let h = 1e-5 * (hi - lo);
            probe.copy_from_slice(&x);
            probe[j] = x[j] + h;
            let up = gp.predict_mean(&probe);
            probe[j] = x[j] - h;
            let down = gp.predict_mean(&probe);
            g2 += ((up - down) / (2.0 * h)).powi(2);
        }
        best = best.max(g2.sqrt());
    }
    best
}

/// Soft local penaliser around a selected point `center` with predictive
/// mean `mean_c` and variance `var_c`:
/// `Phi((L |x - c| - (m_best - mean_c)) / sqrt(2 var_c))`.
pub fn soft_penalizer(x: &[f64], center: &[f64], lipschitz: f64, best: f64, mean_c: f64, var_c: f64) -> f64 {
    let dist = x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    let z = lipschitz * dist - (best - mean_c);
    if var_c <= 1e-24 {
        return if z >= 0.0 { 1.0 } else { 0.0 };
    }
    normal_cdf(z / (2.0 * var_c).sqrt())
}

/// Greedy maximisation of EI times the soft penalisers of all points selected
/// so far.
pub fn lp_batch(gp: &GpPosterior, data: &Dataset, domain: &Domain, k: usize, seed: u64) -> Result<Batch> {
    let best = incumbent(data)?;
    if k == 0 {
        return Err(Error::Parameter("batch size must be at least 1".into()));
    }
    let lipschitz = lipschitz_estimate(gp, domain, seed);
    if !(lipschitz >= 1e-12) {
        let mut batch = naive_qei_batch(gp, data, domain, k, DEFAULT_GRID, seed)?;
        batch.strategy = LOCAL_PENALIZATION.into();
        batch.flags.push("lp-lipschitz-degenerate".into());
        return Ok(batch);
    }
    let ctx = AcquisitionContext::new(gp, best);
    let mut centers: Vec<(Vec<f64>, f64, f64)> = Vec::with_capacity(k);
    let mut taken = HashSet::new();
    let mut batch = Batch::new(LOCAL_PENALIZATION);
    for round in 0..k {
        let acq = |x: &[f64]| {
            centers.iter().fold(expected_improvement(&ctx, x), |acc, (c, m, v)| {
                acc * soft_penalizer(x, c, lipschitz, best, *m, *v)
            })
        };
        let (x, row) = argmax_acquisition(acq, domain, data, &taken, round_seed(seed, round)).ok_or(Error::PoolExhausted {
            needed: k,
            available: round,
        })?;
        if let Some(r) = row {
            taken.insert(r);
        }
        let (m, v) = gp.predict(&x)?;
        centers.push((x.clone(), m, v));
        batch.push(x, Provenance::PenalizedArgmax);
    }
    Ok(batch)
}
