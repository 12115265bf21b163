use batchbo_core::acquisition::AcquisitionContext;
use batchbo_core::error::Error;
use batchbo_core::gp::{GpHyperparams, GpPosterior, Scaling};
use batchbo_core::objective::Domain;
use batchbo_core::slice::{bgss_or_uniform, bgss_sample, estimate_alpha_min, search_alpha_min, EiSurface};

fn unit() -> Domain {
    Domain::continuous(vec![(0.0, 1.0)]).unwrap()
}

#[test]
fn linear_surface_gives_triangular_marginal() {
    let surf = |x: &[f64]| x[0];
    let set = bgss_sample(&surf, &unit(), 10_000, 0.0, 1).unwrap();
    let mut xs: Vec<f64> = set.samples.iter().map(|s| s[0]).collect();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let ks = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = x * x;
            (cdf - i as f64 / n).abs().max(((i + 1) as f64 / n - cdf).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.02, "KS distance {ks}");
}

#[test]
fn constant_surface_gives_uniform_marginal() {
    let surf = |_: &[f64]| 2.0;
    let set = bgss_sample(&surf, &unit(), 10_000, 0.0, 2).unwrap();
    let mut bins = [0usize; 10];
    for s in &set.samples {
        bins[((s[0] * 10.0) as usize).min(9)] += 1;
    }
    let expected = 1000.0;
    let chi2: f64 = bins.iter().map(|&b| (b as f64 - expected).powi(2) / expected).sum();
    // 99th percentile of chi-square with 9 degrees of freedom
    assert!(chi2 < 21.666, "chi-square {chi2}, bins {bins:?}");
}

#[test]
fn discrete_frequencies_follow_weights() {
    let d = Domain::discrete(vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap();
    let surf = |x: &[f64]| if x[0] == 1.0 { 2.0 } else { 1.0 };
    let set = bgss_sample(&surf, &d, 10_000, 0.0, 3).unwrap();
    let mut counts = [0usize; 3];
    for s in &set.samples {
        counts[s[0] as usize] += 1;
    }
    for (c, p) in counts.iter().zip([0.25, 0.5, 0.25]) {
        assert!((*c as f64 / 1e4 - p).abs() < 0.02, "{counts:?}");
    }
}

#[test]
fn acceptance_rate_recovers_region_mass() {
    // integral of (x^2 + 0.5 - 0.5) over [0, 2] = 8/3 with alpha_min = 0.5
    let d = Domain::continuous(vec![(0.0, 2.0)]).unwrap();
    let surf = |x: &[f64]| x[0] * x[0] + 0.5;
    let set = bgss_sample(&surf, &d, 10_000, 0.5, 4).unwrap();
    let env = set.envelope.unwrap();
    let estimate = set.samples.len() as f64 / set.n_proposals_used as f64 * (env - 0.5) * 2.0;
    let exact = 8.0 / 3.0;
    assert!((estimate - exact).abs() < 0.05 * exact, "{estimate} vs {exact}");
}

#[test]
fn samples_lie_above_floor_and_in_domain() {
    let d = Domain::continuous(vec![(-1.0, 1.0), (0.0, 3.0)]).unwrap();
    let surf = |x: &[f64]| (-(x[0] * x[0]) - (x[1] - 1.0).powi(2)).exp();
    let set = bgss_sample(&surf, &d, 500, 0.0, 5).unwrap();
    assert_eq!(set.samples.len(), 500);
    for (s, a) in set.samples.iter().zip(&set.alpha_values) {
        assert!(d.contains(s));
        assert!(*a > set.alpha_min);
        assert_eq!(*a, surf(s));
    }
    assert_eq!(set, bgss_sample(&surf, &d, 500, 0.0, 5).unwrap());
    assert_ne!(set.samples, bgss_sample(&surf, &d, 500, 0.0, 6).unwrap().samples);
}

#[test]
fn flat_surface_errors_and_falls_back() {
    let surf = |_: &[f64]| 1.0;
    assert!(matches!(bgss_sample(&surf, &unit(), 10, 1.0, 0), Err(Error::FlatSurface { .. })));
    let set = bgss_or_uniform(&surf, &unit(), 10, 1.0, 0).unwrap();
    assert!(set.uniform_fallback);
    assert_eq!(set.samples.len(), 10);
    assert!(bgss_sample(&surf, &unit(), 0, 0.0, 0).is_err());
}

#[test]
fn floor_of_test_surfaces() {
    let neg_xsinx = |x: &[f64]| -x[0] * x[0].sin();
    let d = Domain::continuous(vec![(0.0, 10.0)]).unwrap();
    let m = search_alpha_min(&neg_xsinx, &d, 0);
    // dense grid oracle: -7.916727 at x = 7.978666
    assert!((m + 7.916_727).abs() < 1e-4, "{m}");

    let c = |_: &[f64]| 3.25;
    assert!((estimate_alpha_min(&c, &unit(), 0) - 3.25).abs() < 1e-9);

    let pool = Domain::discrete(vec![vec![0.0], vec![1.0], vec![3.0]]).unwrap();
    assert_eq!(estimate_alpha_min(&|x: &[f64]| (x[0] - 1.0).abs(), &pool, 0), 0.0);
}

#[test]
fn ei_floor_is_zero() {
    let x: Vec<Vec<f64>> = (0..4).map(|i| vec![i as f64 / 3.0]).collect();
    let y = vec![0.0, 1.0, 0.2, 0.5];
    let gp = GpPosterior::new(x, y, GpHyperparams::new(1.0, vec![0.3], 1e-8).unwrap(), Scaling::identity(1)).unwrap();
    let surf = EiSurface(AcquisitionContext::from_training_max(&gp));
    let floor = estimate_alpha_min(&surf, &unit(), 0);
    let searched = search_alpha_min(&surf, &unit(), 0);
    assert!(floor >= -1e-9 && floor <= searched + 1e-12, "{floor} vs {searched}");
    let set = bgss_sample(&surf, &unit(), 200, floor, 1).unwrap();
    assert!(set.alpha_values.iter().all(|a| *a > 0.0));
}

#[test]
fn narrow_peaks_use_mixture_and_keep_exact_weights() {
    // two Gaussian bumps of width 0.01 in the unit square, heights 1 and 0.5:
    // each holds mass proportional to its height
    let d = Domain::continuous(vec![(0.0, 1.0), (0.0, 1.0)]).unwrap();
    let bump = |x: &[f64], c: [f64; 2], h: f64| h * (-((x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2)) / (2.0 * 1e-4)).exp();
    let surf = |x: &[f64]| bump(x, [0.3, 0.3], 1.0) + bump(x, [0.7, 0.6], 0.5);
    let set = bgss_sample(&surf, &d, 6000, 0.0, 11).unwrap();
    assert!(set.mixture_proposal);
    assert!(!set.uniform_fallback);
    assert!(set.envelope.is_none());
    let near_first: Vec<f64> = set.samples.iter().filter(|s| s[0] < 0.5).map(|s| s[0] - 0.3).collect();
    let share = near_first.len() as f64 / 6000.0;
    assert!((share - 2.0 / 3.0).abs() < 0.025, "share {share}");

    // marginal around the first bump is N(0, 0.01^2)
    let mut xs = near_first;
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let normal = statrs::distribution::Normal::new(0.0, 0.01).unwrap();
    let ks = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = statrs::distribution::ContinuousCDF::cdf(&normal, x);
            (cdf - i as f64 / n).abs().max(((i + 1) as f64 / n - cdf).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.03, "KS distance {ks}");
}

#[test]
fn broad_surface_stays_on_uniform_path() {
    let surf = |x: &[f64]| x[0];
    let set = bgss_sample(&surf, &unit(), 100, 0.0, 1).unwrap();
    assert!(!set.mixture_proposal);
    assert!(set.envelope.is_some());
}
