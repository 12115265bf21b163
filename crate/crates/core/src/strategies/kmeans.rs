//! K-means with k-means++ seeding: Lloyd iterations polished by Hartigan
//! single-point moves.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub const KMEANS_RESTARTS: usize = 10;
pub const KMEANS_MAX_ITERS: usize = 300;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansResult {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    /// Within-cluster sum of squared distances.
    pub inertia: f64,
    /// Inertia after every assignment step of the winning restart.
    pub inertia_history: Vec<f64>,
    /// Fewer points than clusters were supplied; one centroid per distinct
    /// point was returned instead of `k`.
    pub degenerate: bool,
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>]) -> (Vec<usize>, f64) {
    let mut inertia = 0.0;
    let assignments = points
        .iter()
        .map(|p| {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let d = sq_dist(p, centroid);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            inertia += best_d;
            best
        })
        .collect();
    (assignments, inertia)
}

fn update(points: &[Vec<f64>], assignments: &[usize], centroids: &mut [Vec<f64>]) {
    let dim = points[0].len();
    let k = centroids.len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in points.iter().zip(assignments) {
        counts[a] += 1;
        for (s, v) in sums[a].iter_mut().zip(p) {
            *s += v;
        }
    }
    for c in 0..k {
        // empty clusters keep their previous centroid
        if counts[c] > 0 {
            let n = counts[c] as f64;
            for (dst, s) in centroids[c].iter_mut().zip(&sums[c]) {
                *dst = s / n;
            }
        }
    }
}

fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut rng::Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)].clone());
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let next = match WeightedIndex::new(&d2) {
            Ok(dist) => dist.sample(rng),
            // every point already coincides with a centroid
            Err(_) => rng.random_range(0..n),
        };
        centroids.push(points[next].clone());
        let c = centroids.last().unwrap();
        for (dv, p) in d2.iter_mut().zip(points) {
            *dv = dv.min(sq_dist(p, c));
        }
    }
    centroids
}

/// One pass of Hartigan single-point moves: a point leaves its cluster when
/// that lowers the total inertia once both centroids are updated. Returns
/// whether anything moved.
fn hartigan_pass(points: &[Vec<f64>], assignments: &mut [usize], centroids: &mut [Vec<f64>]) -> bool {
    let k = centroids.len();
    let mut counts = vec![0usize; k];
    for &a in assignments.iter() {
        counts[a] += 1;
    }
    let mut moved = false;
    for (i, p) in points.iter().enumerate() {
        let a = assignments[i];
        if counts[a] < 2 {
            continue;
        }
        let na = counts[a] as f64;
        let leave = na / (na - 1.0) * sq_dist(p, &centroids[a]);
        let mut best: Option<(usize, f64)> = None;
        for b in (0..k).filter(|&b| b != a) {
            let nb = counts[b] as f64;
            let join = nb / (nb + 1.0) * sq_dist(p, &centroids[b]);
            if join < leave * (1.0 - 1e-12) && best.is_none_or(|(_, j)| join < j) {
                best = Some((b, join));
            }
        }
        if let Some((b, _)) = best {
            let nb = counts[b] as f64;
            for (c, v) in centroids[a].iter_mut().zip(p) {
                *c = (*c * na - v) / (na - 1.0);
            }
            for (c, v) in centroids[b].iter_mut().zip(p) {
                *c = (*c * nb + v) / (nb + 1.0);
            }
            counts[a] -= 1;
            counts[b] += 1;
            assignments[i] = b;
            moved = true;
        }
    }
    moved
}

/// Lloyd iterations to a fixed point, then Hartigan refinement, alternating
/// until neither changes the partition.
fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>) -> KMeansResult {
    let (mut assignments, mut inertia) = assign(points, &centroids);
    let mut history = vec![inertia];
    let mut iters = 0;
    loop {
        while iters < KMEANS_MAX_ITERS {
            iters += 1;
            update(points, &assignments, &mut centroids);
            let (next, next_inertia) = assign(points, &centroids);
            history.push(next_inertia);
            let settled = next == assignments;
            assignments = next;
            inertia = next_inertia;
            if settled {
                break;
            }
        }
        if iters >= KMEANS_MAX_ITERS || !hartigan_pass(points, &mut assignments, &mut centroids) {
            break;
        }
        update(points, &assignments, &mut centroids);
        let (next, next_inertia) = assign(points, &centroids);
        history.push(next_inertia);
        assignments = next;
        inertia = next_inertia;
    }
    KMeansResult {
        centroids,
        assignments,
        inertia,
        inertia_history: history,
        degenerate: false,
    }
}

/// Best of ten k-means++/Lloyd runs by inertia (earliest restart wins ties).
pub fn kmeans_fit(points: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansResult> {
    if k == 0 {
        return Err(Error::Parameter("k-means needs k >= 1".into()));
    }
    let Some(first) = points.first() else {
        return Err(Error::Parameter("k-means needs at least one point".into()));
    };
    if let Some(p) = points.iter().find(|p| p.len() != first.len()) {
        return Err(Error::shape(first.len(), p.len()));
    }
    if points.len() < k {
        let mut distinct: Vec<Vec<f64>> = Vec::new();
        for p in points {
            if !distinct.contains(p) {
                distinct.push(p.clone());
            }
        }
        let (assignments, inertia) = assign(points, &distinct);
        return Ok(KMeansResult {
            centroids: distinct,
            assignments,
            inertia,
            inertia_history: vec![inertia],
            degenerate: true,
        });
    }

    let mut best: Option<KMeansResult> = None;
    for r in 0..KMEANS_RESTARTS {
        let mut rng = rng::stream(seed, &[0x4B4D, r as u64]);
        let run = lloyd(points, plus_plus_init(points, k, &mut rng));
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_clusters_1d() {
        let pts = vec![vec![0.0], vec![1.0], vec![10.0], vec![11.0]];
        let res = kmeans_fit(&pts, 2, 0).unwrap();
        let mut c: Vec<f64> = res.centroids.iter().map(|c| c[0]).collect();
        c.sort_by(f64::total_cmp);
        assert_eq!(c, vec![0.5, 10.5]);
        assert_eq!(res.inertia, 1.0);
    }

    #[test]
    fn singleton_clusters() {
        let pts = vec![vec![0.0, 1.0], vec![2.0, -1.0], vec![5.0, 5.0]];
        let res = kmeans_fit(&pts, 3, 4).unwrap();
        assert_eq!(res.inertia, 0.0);
        for p in &pts {
            assert!(res.centroids.contains(p));
        }
    }

    #[test]
    fn identical_points() {
        let pts = vec![vec![2.0, 3.0]; 6];
        let res = kmeans_fit(&pts, 2, 1).unwrap();
        assert_eq!(res.centroids, vec![vec![2.0, 3.0]; 2]);
        assert_eq!(res.inertia, 0.0);
        assert!(!res.degenerate);
    }

    #[test]
    fn fewer_points_than_clusters() {
        let pts = vec![vec![1.0], vec![1.0], vec![4.0]];
        let res = kmeans_fit(&pts, 5, 0).unwrap();
        assert!(res.degenerate);
        assert_eq!(res.centroids, vec![vec![1.0], vec![4.0]]);
        assert!(kmeans_fit(&pts, 0, 0).is_err());
        assert!(kmeans_fit(&[], 1, 0).is_err());
    }

    #[test]
    fn inertia_non_increasing_and_assignment_nearest() {
        let mut rng = rng::rng_from(8);
        let pts: Vec<Vec<f64>> = (0..300).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
        let res = kmeans_fit(&pts, 8, 2).unwrap();
        for w in res.inertia_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        for (p, &a) in pts.iter().zip(&res.assignments) {
            let da = sq_dist(p, &res.centroids[a]);
            assert!(res.centroids.iter().all(|c| da <= sq_dist(p, c)));
        }
        assert_eq!(res, kmeans_fit(&pts, 8, 2).unwrap());
    }
}
