use std::collections::HashSet;

use crate::acquisition::AcquisitionContext;
use crate::error::{Error, Result};
use crate::gp::GpPosterior;
use crate::objective::{Dataset, Domain};
use crate::rng;
use crate::slice::{self, EiSurface, SliceSampleSet};

use super::kmeans::{kmeans_fit, sq_dist, KMeansResult};
use super::{evaluated_rows, Batch, Provenance};

pub const KMBBO: &str = "kmbbo";

/// Slice samples under the EI surface and their clustering.
#[derive(Debug, Clone)]
pub struct KmbboDraw {
    pub slices: SliceSampleSet,
    pub clusters: KMeansResult,
}

/// Steps 2 and 3 of a KMBBO epoch: slice-sample EI above its floor and cluster
/// the samples into `k` groups. Centroids are not snapped.
pub fn kmbbo_centroids(ctx: &AcquisitionContext<'_>, domain: &Domain, k: usize, n_s: usize, seed: u64) -> Result<KmbboDraw> {
    if k == 0 {
        return Err(Error::Parameter("batch size must be at least 1".into()));
    }
    if n_s < k {
        return Err(Error::Parameter(format!("need at least {k} slice samples, got {n_s}")));
    }
    let surface = EiSurface(*ctx);
    let alpha_min = slice::estimate_alpha_min(&surface, domain, rng::derive_seed(seed, &[1]));
    let slices = slice::bgss_or_uniform(&surface, domain, n_s, alpha_min, rng::derive_seed(seed, &[2]))?;
    log::debug!(
        "slice sampling: {} samples from {} proposals (fallback: {})",
        slices.samples.len(),
        slices.n_proposals_used,
        slices.uniform_fallback
    );
    let clusters = kmeans_fit(&slices.samples, k, rng::derive_seed(seed, &[3]))?;
    Ok(KmbboDraw { slices, clusters })
}

/// Greedy nearest-row assignment: centroids are processed in order and each
/// takes the closest row that is neither in `exclude` nor already taken.
/// Returns pool row indices.
pub fn snap_to_candidates(points: &[Vec<f64>], domain: &Domain, exclude: &HashSet<usize>) -> Result<Vec<usize>> {
    let pool = domain
        .candidates()
        .ok_or_else(|| Error::Parameter("snapping needs a discrete domain".into()))?;
    let free = (0..pool.len()).filter(|i| !exclude.contains(i)).count();
    if free < points.len() {
        return Err(Error::PoolExhausted {
            needed: points.len(),
            available: free,
        });
    }
    let mut taken: HashSet<usize> = HashSet::with_capacity(points.len());
    let mut out = Vec::with_capacity(points.len());
    for p in points {
        if p.len() != domain.dim() {
            return Err(Error::shape(domain.dim(), p.len()));
        }
        let mut best: Option<(usize, f64)> = None;
        for (i, row) in pool.rows().iter().enumerate() {
            if exclude.contains(&i) || taken.contains(&i) {
                continue;
            }
            let d = sq_dist(p, row);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        let (i, _) = best.expect("free rows were counted");
        taken.insert(i);
        out.push(i);
    }
    Ok(out)
}

/// One KMBBO batch. On discrete domains centroids are snapped to distinct
/// unevaluated rows.
pub fn kmbbo_batch(gp: &GpPosterior, data: &Dataset, domain: &Domain, k: usize, n_s: usize, seed: u64) -> Result<Batch> {
    let incumbent = data
        .incumbent()
        .ok_or_else(|| Error::Parameter("KMBBO needs at least one observation".into()))?;
    let ctx = AcquisitionContext::new(gp, incumbent);
    let draw = kmbbo_centroids(&ctx, domain, k, n_s, seed)?;

    let mut batch = Batch::new(KMBBO);
    if draw.slices.uniform_fallback {
        batch.flags.push("slice-uniform-fallback".into());
    }
    for c in &draw.clusters.centroids {
        batch.push(c.clone(), Provenance::Centroid);
    }
    if draw.clusters.degenerate {
        batch.flags.push("kmeans-degenerate".into());
        let mut rng = rng::stream(seed, &[4]);
        while batch.len() < k {
            batch.push(domain.sample_uniform(&mut rng), Provenance::Filler);
        }
    }

    if domain.is_discrete() {
        let rows = snap_to_candidates(&batch.points, domain, &evaluated_rows(domain, data))?;
        let pool = domain.candidates().unwrap();
        batch.points = rows.iter().map(|&i| pool.rows()[i].clone()).collect();
        batch.snapped = vec![true; batch.len()];
    }
    Ok(batch)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snap_exact_row_and_conflicts() {
        let d = Domain::discrete(vec![vec![0.0], vec![1.0], vec![2.0], vec![5.0]]).unwrap();
        assert_eq!(snap_to_candidates(&[vec![2.0]], &d, &HashSet::new()).unwrap(), vec![2]);
        // both nearest to row 1; second falls to the next nearest (row 0 and 2
        // tie at distance 1, lowest index wins)
        assert_eq!(
            snap_to_candidates(&[vec![1.1], vec![1.0]], &d, &HashSet::new()).unwrap(),
            vec![1, 0]
        );
        let ex: HashSet<usize> = [1].into_iter().collect();
        assert_eq!(snap_to_candidates(&[vec![1.0]], &d, &ex).unwrap(), vec![0]);
    }

    #[test]
    fn snap_exhaustion() {
        let d = Domain::discrete(vec![vec![0.0], vec![1.0]]).unwrap();
        let ex: HashSet<usize> = [0].into_iter().collect();
        assert!(matches!(
            snap_to_candidates(&[vec![0.0], vec![1.0]], &d, &ex),
            Err(Error::PoolExhausted { needed: 2, available: 1 })
        ));
        let c = Domain::continuous(vec![(0.0, 1.0)]).unwrap();
        assert!(snap_to_candidates(&[vec![0.0]], &c, &HashSet::new()).is_err());
    }
}
