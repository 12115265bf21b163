//! Box-constrained local search and space-filling start designs shared by the
//! acquisition maximisers, the alpha floor search and the benchmark oracle.

use rand::Rng as _;

use crate::rng::Rng;

/// Uniform points in the box.
pub fn uniform_points(n: usize, bounds: &[(f64, f64)], rng: &mut Rng) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| bounds.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect())
        .collect()
}

/// Latin hypercube design: each dimension is split into `n` strata and every
/// stratum holds exactly one point.
pub fn latin_hypercube(n: usize, bounds: &[(f64, f64)], rng: &mut Rng) -> Vec<Vec<f64>> {
    let mut points = vec![vec![0.0; bounds.len()]; n];
    for (j, &(lo, hi)) in bounds.iter().enumerate() {
        let mut strata: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let swap = rng.random_range(0..=i);
            strata.swap(i, swap);
        }
        for (p, &s) in points.iter_mut().zip(&strata) {
            let u: f64 = rng.random();
            p[j] = lo + (hi - lo) * (s as f64 + u) / n as f64;
        }
    }
    points
}

#[derive(Debug, Clone, Copy)]
pub struct AscentOptions {
    pub max_iters: usize,
    /// Finite-difference step as a fraction of each dimension's width.
    pub rel_step: f64,
    pub tol: f64,
}

impl Default for AscentOptions {
    fn default() -> Self {
        AscentOptions {
            max_iters: 100,
            rel_step: 1e-6,
            tol: 1e-12,
        }
    }
}

fn project(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, &(lo, hi)) in x.iter_mut().zip(bounds) {
        *v = v.clamp(lo, hi);
    }
}

/// Projected gradient ascent with central-difference gradients and a
/// backtracking step. Works in coordinates rescaled to the unit box so one step
/// size fits every dimension.
pub fn local_ascent<F>(f: F, x0: &[f64], bounds: &[(f64, f64)], opts: AscentOptions) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let d = bounds.len();
    let widths: Vec<f64> = bounds.iter().map(|&(lo, hi)| (hi - lo).max(f64::MIN_POSITIVE)).collect();
    let mut x = x0.to_vec();
    project(&mut x, bounds);
    let mut fx = f(&x);
    if !fx.is_finite() {
        return (x, fx);
    }
    let mut step = 0.05;
    let mut grad = vec![0.0; d];
    let mut probe = x.clone();

    for _ in 0..opts.max_iters {
        // gradient in unit-box coordinates
        for j in 0..d {
            let h = opts.rel_step * widths[j];
            probe.copy_from_slice(&x);
            probe[j] = (x[j] + h).min(bounds[j].1);
            let up = probe[j];
            let f_up = f(&probe);
            probe[j] = (x[j] - h).max(bounds[j].0);
            let down = probe[j];
            let f_down = f(&probe);
            grad[j] = if up > down {
                (f_up - f_down) / (up - down) * widths[j]
            } else {
                0.0
            };
        }
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm == 0.0 || !gnorm.is_finite() {
            break;
        }

        let mut improved = false;
        while step > 1e-12 {
            let mut cand: Vec<f64> = (0..d)
                .map(|j| x[j] + step * grad[j] / gnorm * widths[j])
                .collect();
            project(&mut cand, bounds);
            let fc = f(&cand);
            if fc.is_finite() && fc > fx {
                let gain = fc - fx;
                x = cand;
                fx = fc;
                improved = true;
                step *= 2.0;
                if gain <= opts.tol * (1.0 + fx.abs()) {
                    return (x, fx);
                }
                break;
            }
            step *= 0.5;
        }
        if !improved {
            break;
        }
        step = step.min(0.5);
    }
    (x, fx)
}

/// Runs [`local_ascent`] from every start and returns the best end point. Ties
/// keep the earliest start.
pub fn multistart_maximize<F>(
    f: F,
    starts: &[Vec<f64>],
    bounds: &[(f64, f64)],
    opts: AscentOptions,
) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let mut best: Option<(Vec<f64>, f64)> = None;
    for s in starts {
        let (x, fx) = local_ascent(&f, s, bounds, opts);
        match &best {
            Some((_, fb)) if !(fx > *fb) => {}
            _ => best = Some((x, fx)),
        }
    }
    best.expect("at least one start")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;

    #[test]
    fn lhs_hits_every_stratum() {
        let mut rng = rng_from(3);
        let pts = latin_hypercube(20, &[(0.0, 1.0), (-2.0, 2.0)], &mut rng);
        for (j, &(lo, hi)) in [(0.0, 1.0), (-2.0f64, 2.0f64)].iter().enumerate() {
            let mut seen = vec![false; 20];
            for p in &pts {
                let s = (((p[j] - lo) / (hi - lo)) * 20.0).floor() as usize;
                seen[s.min(19)] = true;
            }
            assert!(seen.iter().all(|&b| b));
        }
    }

    #[test]
    fn ascent_finds_quadratic_peak() {
        let f = |x: &[f64]| -(x[0] - 0.3).powi(2) - 4.0 * (x[1] + 0.7).powi(2);
        let (x, fx) = local_ascent(f, &[0.9, 0.9], &[(-1.0, 1.0), (-1.0, 1.0)], AscentOptions::default());
        assert!((x[0] - 0.3).abs() < 1e-4, "{x:?}");
        assert!((x[1] + 0.7).abs() < 1e-4, "{x:?}");
        assert!(fx > -1e-7);
    }

    #[test]
    fn ascent_respects_bounds() {
        let f = |x: &[f64]| x[0];
        let (x, _) = local_ascent(f, &[0.1], &[(0.0, 2.0)], AscentOptions::default());
        assert_eq!(x[0], 2.0);
    }
}
