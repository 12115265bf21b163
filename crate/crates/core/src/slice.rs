//! Batch generalised slice sampling.
//!
//! Draws points whose density is proportional to `alpha(x) - alpha_min` by
//! sampling `(x, u)` uniformly from the region `alpha_min < u < alpha(x)` and
//! keeping `x`. Continuous domains use rejection from a uniform envelope over
//! the box. When a pilot scan shows the surface is too concentrated for that,
//! proposals come from a defensive mixture of the uniform box and Student-t
//! components shaped by the curvature at each peak, still with exact
//! rejection. Discrete domains sample
//! rows with exact normalised weights.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng as _;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand_distr::{ChiSquared, StandardNormal};
use statrs::function::gamma::ln_gamma;
use serde::{Deserialize, Serialize};

use crate::acquisition::{expected_improvement, AcquisitionContext};
use crate::error::{Error, Result};
use crate::objective::Domain;
use crate::optimize::{self, AscentOptions};
use crate::rng::{self, Rng};

/// Proposal budget per requested sample.
pub const PROPOSALS_PER_SAMPLE: usize = 10_000;
/// Envelope headroom over the largest value seen.
const HEADROOM: f64 = 1.5;
const FLAT_TOL: f64 = 1e-12;
const PILOT_POINTS: usize = 1000;
const CHECK_AFTER: usize = 50_000;
const PILOT_ASCENTS: usize = 5;
const FLOOR_STARTS: usize = 20;
/// Pilot-estimated uniform acceptance rate below which the peak mixture is
/// used from the start.
const MIN_UNIFORM_RATE: f64 = 1e-2;
/// Weight of the uniform component in the peak mixture; keeps the proposal
/// positive everywhere so the target is covered beyond the known peaks.
const DEFENSIVE_WEIGHT: f64 = 0.2;
/// Degrees of freedom of the peak components.
const TAIL_DOF: f64 = 3.0;
/// Restarts the peak mixture may take on breaches; past this a breach raises
/// the bound in place.
const MAX_RESTARTS: usize = 40;
/// Variance inflation of a peak component over the local curvature.
const SHAPE_INFLATION: f64 = 2.0;
/// Scale factor applied to a component when a breach lands in its basin.
const BREACH_WIDENING: f64 = 1.5;

/// A scalar surface over the domain.
pub trait Surface {
    fn value(&self, x: &[f64]) -> f64;

    /// Any value `>= self.value(x)`. Cheap bounds let the sampler reject
    /// proposals without a full evaluation.
    fn upper_bound(&self, x: &[f64]) -> f64 {
        self.value(x)
    }

    /// Known lower bound of the surface, if one exists analytically.
    fn known_floor(&self) -> Option<f64> {
        None
    }
}

impl<F: Fn(&[f64]) -> f64> Surface for F {
    fn value(&self, x: &[f64]) -> f64 {
        self(x)
    }
}

/// Expected improvement as a sampling surface.
pub struct EiSurface<'a>(pub AcquisitionContext<'a>);

impl Surface for EiSurface<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        expected_improvement(&self.0, x)
    }

    fn upper_bound(&self, x: &[f64]) -> f64 {
        self.0.ei_upper_bound(x)
    }

    fn known_floor(&self) -> Option<f64> {
        Some(0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceSampleSet {
    pub samples: Vec<Vec<f64>>,
    pub alpha_min: f64,
    pub alpha_values: Vec<f64>,
    pub n_requested: usize,
    pub n_proposals_used: usize,
    /// Final height of the uniform rejection envelope; `None` for discrete
    /// domains and for the peak-mixture proposal.
    pub envelope: Option<f64>,
    /// Drawn under the peak-mixture proposal because uniform proposals would
    /// almost never land under a concentrated surface.
    pub mixture_proposal: bool,
    /// Samples are uniform over the domain because the surface was flat or the
    /// proposal budget ran out.
    pub uniform_fallback: bool,
}

/// Lower floor of `acq` over `domain`. Surfaces with an analytic floor (EI)
/// return it directly; discrete domains return the exact minimum; continuous
/// domains run local descent from a 20-point Latin hypercube.
pub fn estimate_alpha_min<S: Surface + ?Sized>(acq: &S, domain: &Domain, seed: u64) -> f64 {
    if let Some(floor) = acq.known_floor() {
        return floor;
    }
    search_alpha_min(acq, domain, seed)
}

/// [`estimate_alpha_min`] without the analytic short-circuit.
pub fn search_alpha_min<S: Surface + ?Sized>(acq: &S, domain: &Domain, seed: u64) -> f64 {
    match domain {
        Domain::Discrete(pool) => pool.rows().iter().map(|r| acq.value(r)).fold(f64::INFINITY, f64::min),
        Domain::Continuous { bounds } => {
            let mut rng = rng::stream(seed, &[0xA1F]);
            let starts = optimize::latin_hypercube(FLOOR_STARTS, bounds, &mut rng);
            let start_min = starts.iter().map(|s| acq.value(s)).fold(f64::INFINITY, f64::min);
            let opts = AscentOptions {
                max_iters: 200,
                ..AscentOptions::default()
            };
            let (_, neg) = optimize::multistart_maximize(|x| -acq.value(x), &starts, bounds, opts);
            start_min.min(-neg)
        }
    }
}

/// Uniform samples over the domain (with replacement on discrete pools).
pub fn uniform_samples(domain: &Domain, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng::stream(seed, &[0x0F1A7]);
    (0..n).map(|_| domain.sample_uniform(&mut rng)).collect()
}

/// True once the acceptance rate seen so far (at least `CHECK_AFTER`
/// proposals) is so low that the remaining proposals would, even at four
/// standard deviations above that rate, fall short of `n_s` acceptances.
fn hopeless(accepted: usize, tried: usize, remaining: usize, n_s: usize) -> bool {
    if tried < CHECK_AFTER || tried % CHECK_AFTER != 0 {
        return false;
    }
    let rate = (accepted as f64 + 4.0 * (accepted as f64).sqrt() + 4.0) / tried as f64;
    (accepted as f64 + rate * remaining as f64) < (n_s as f64)
}

/// Draws `n_s` samples with density proportional to `acq(x) - alpha_min`.
///
/// Fails with [`Error::FlatSurface`] when the surface never rises more than
/// 1e-12 above `alpha_min` or when `10^4 * n_s` proposals do not yield `n_s`
/// acceptances. The budget check is anticipated: sampling stops as soon as
/// the observed acceptance rate makes filling `n_s` within budget implausible.
pub fn bgss_sample<S: Surface + ?Sized>(
    acq: &S,
    domain: &Domain,
    n_s: usize,
    alpha_min: f64,
    seed: u64,
) -> Result<SliceSampleSet> {
    if n_s == 0 {
        return Err(Error::Parameter("need at least one slice sample".into()));
    }
    let mut rng = rng::stream(seed, &[0xB655]);
    match domain {
        Domain::Discrete(pool) => {
            let values: Vec<f64> = pool.rows().iter().map(|r| acq.value(r)).collect();
            let weights: Vec<f64> = values.iter().map(|v| (v - alpha_min).max(0.0)).collect();
            let top = weights.iter().copied().fold(0.0, f64::max);
            if !(top > FLAT_TOL) {
                return Err(Error::FlatSurface {
                    requested: n_s,
                    accepted: 0,
                    proposals: 0,
                });
            }
            let dist = WeightedIndex::new(&weights).map_err(|e| Error::Parameter(e.to_string()))?;
            let picks: Vec<usize> = (0..n_s).map(|_| dist.sample(&mut rng)).collect();
            Ok(SliceSampleSet {
                samples: picks.iter().map(|&i| pool.rows()[i].clone()).collect(),
                alpha_min,
                alpha_values: picks.iter().map(|&i| values[i]).collect(),
                n_requested: n_s,
                n_proposals_used: n_s,
                envelope: None,
                mixture_proposal: false,
                uniform_fallback: false,
            })
        }
        Domain::Continuous { bounds } => continuous_sample(acq, bounds, n_s, alpha_min, &mut rng),
    }
}

/// Proposal distribution for the rejection loop.
trait Proposal {
    /// Draws into `x`; `false` when the draw left the box, which counts as a
    /// rejected proposal.
    fn draw(&self, rng: &mut Rng, x: &mut [f64]) -> bool;
    /// Density at an in-box point, up to a constant factor.
    fn density(&self, x: &[f64]) -> f64;
}

struct UniformBox<'a>(&'a [(f64, f64)]);

impl Proposal for UniformBox<'_> {
    fn draw(&self, rng: &mut Rng, x: &mut [f64]) -> bool {
        for (v, &(lo, hi)) in x.iter_mut().zip(self.0) {
            *v = rng.random_range(lo..=hi);
        }
        true
    }

    fn density(&self, _: &[f64]) -> f64 {
        1.0
    }
}

/// A peak of the surface with the shape of its proposal component.
#[derive(Clone, Debug)]
struct Peak {
    center: Vec<f64>,
    /// Height above the floor.
    height: f64,
    /// Lower Cholesky factor of the component's scale matrix.
    chol: DMatrix<f64>,
}

impl Peak {
    /// Shapes the component from the curvature of `ln(alpha - alpha_min)` at
    /// the peak, which is exact for a Gaussian bump. Flat or convex directions
    /// (edge peaks, ridges) are clamped to the box size; if the curvature
    /// cannot be measured the axis half-widths are used instead.
    fn fit<S: Surface + ?Sized>(acq: &S, center: Vec<f64>, height: f64, alpha_min: f64, bounds: &[(f64, f64)]) -> Self {
        let d = bounds.len();
        let half: Vec<f64> = (0..d).map(|j| half_width(acq, &center, alpha_min + 0.5 * height, j, bounds[j])).collect();
        let chol = curvature_shape(acq, &center, &half, alpha_min, bounds)
            .unwrap_or_else(|| DMatrix::from_diagonal(&DVector::from_vec(half.clone())));
        Peak { center, height, chol }
    }

    fn log_det(&self) -> f64 {
        self.chol.diagonal().iter().map(|v| v.ln()).sum()
    }
}

/// Cholesky factor of `SHAPE_INFLATION` times the inverse negative Hessian of
/// `ln(alpha - alpha_min)`, by central differences with steps a quarter of
/// the axis half-widths. The stencil is shifted inwards at the box edge.
fn curvature_shape<S: Surface + ?Sized>(acq: &S, c: &[f64], half: &[f64], alpha_min: f64, bounds: &[(f64, f64)]) -> Option<DMatrix<f64>> {
    let d = c.len();
    let step: Vec<f64> = half.iter().zip(bounds).map(|(s, &(lo, hi))| (0.25 * s).clamp(1e-6 * (hi - lo), 0.25 * (hi - lo))).collect();
    let base: Vec<f64> = c
        .iter()
        .zip(&step)
        .zip(bounds)
        .map(|((v, h), &(lo, hi))| v.clamp(lo + h, hi - h))
        .collect();
    let log_at = |x: &[f64]| {
        let a = acq.value(x) - alpha_min;
        (a > 0.0).then(|| a.ln())
    };
    let f0 = log_at(&base)?;
    let mut x = base.clone();
    let mut hess = DMatrix::zeros(d, d);
    for j in 0..d {
        x[j] = base[j] + step[j];
        let fp = log_at(&x)?;
        x[j] = base[j] - step[j];
        let fm = log_at(&x)?;
        x[j] = base[j];
        hess[(j, j)] = (fp - 2.0 * f0 + fm) / (step[j] * step[j]);
        for k in 0..j {
            let mut corner = |sj: f64, sk: f64| {
                x[j] = base[j] + sj * step[j];
                x[k] = base[k] + sk * step[k];
                let v = log_at(&x);
                x[j] = base[j];
                x[k] = base[k];
                v
            };
            let v = (corner(1.0, 1.0)? - corner(1.0, -1.0)? - corner(-1.0, 1.0)? + corner(-1.0, -1.0)?) / (4.0 * step[j] * step[k]);
            hess[(j, k)] = v;
            hess[(k, j)] = v;
        }
    }
    let eig = SymmetricEigen::new(-hess);
    let widest = bounds.iter().map(|&(lo, hi)| hi - lo).fold(0.0, f64::max);
    let floor = 1.0 / (widest * widest);
    let inv: DVector<f64> = eig.eigenvalues.map(|l| if l.is_finite() { SHAPE_INFLATION / l.max(floor) } else { SHAPE_INFLATION / floor });
    let cov = &eig.eigenvectors * DMatrix::from_diagonal(&inv) * eig.eigenvectors.transpose();
    let cov = (&cov + cov.transpose()) * 0.5;
    cov.cholesky().map(|c| c.l())
}

/// Defensive mixture: the uniform box with weight [`DEFENSIVE_WEIGHT`] plus
/// multivariate Student-t components on the surface's peaks. The polynomial
/// tails keep `alpha / q` bounded on acquisition surfaces, whose tails are far
/// heavier than Gaussian.
struct PeakMixture<'a> {
    bounds: &'a [(f64, f64)],
    peaks: &'a [Peak],
    /// Cumulative component weights over the peak part, ending at 1.
    cumulative: Vec<f64>,
    /// Volume-scaled normalising factor of each component, weight included.
    factors: Vec<f64>,
    chi2: ChiSquared<f64>,
}

impl<'a> PeakMixture<'a> {
    /// Weights bring every peak to a common ratio `R = height / q(center)`,
    /// counting the uniform part, with `R` as small as the weights allow.
    /// Peaks the uniform part already covers get no weight.
    fn new(bounds: &'a [(f64, f64)], peaks: &'a [Peak]) -> Self {
        let log_volume: f64 = bounds.iter().map(|&(lo, hi)| (hi - lo).ln()).sum();
        let d = bounds.len() as f64;
        let log_t = ln_gamma(0.5 * (TAIL_DOF + d)) - ln_gamma(0.5 * TAIL_DOF) - 0.5 * d * (TAIL_DOF * std::f64::consts::PI).ln();
        // centre density of a unit-weight component, volume-scaled
        let unit: Vec<f64> = peaks
            .iter()
            .map(|p| (1.0 - DEFENSIVE_WEIGHT) * (log_t - p.log_det() + log_volume).exp())
            .collect();
        let weights_at = |r: f64| -> Vec<f64> { peaks.iter().zip(&unit).map(|(p, u)| (p.height / r - DEFENSIVE_WEIGHT).max(0.0) / u).collect() };
        let top = peaks.iter().map(|p| p.height).fold(0.0, f64::max) / DEFENSIVE_WEIGHT;
        let (mut lo, mut hi) = (top * 1e-300, top);
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if weights_at(mid).iter().sum::<f64>() > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut raw = weights_at(hi);
        let mut total: f64 = raw.iter().sum();
        if !(total > 0.0) {
            raw = vec![1.0; peaks.len()];
            total = peaks.len() as f64;
        }
        let mut acc = 0.0;
        let mut cumulative = Vec::with_capacity(raw.len());
        let mut factors = Vec::with_capacity(raw.len());
        for (w, u) in raw.iter().zip(&unit) {
            let w = w / total;
            acc += w;
            cumulative.push(acc);
            factors.push(w * u);
        }
        // rounding slack goes to the last weighted component, never to an
        // unweighted one
        let last = raw.iter().rposition(|w| *w > 0.0).unwrap_or(raw.len() - 1);
        cumulative[last..].iter_mut().for_each(|c| *c = 1.0);
        PeakMixture {
            bounds,
            peaks,
            cumulative,
            factors,
            chi2: ChiSquared::new(TAIL_DOF).expect("positive degrees of freedom"),
        }
    }
}

impl Proposal for PeakMixture<'_> {
    fn draw(&self, rng: &mut Rng, x: &mut [f64]) -> bool {
        if rng.random::<f64>() < DEFENSIVE_WEIGHT {
            return UniformBox(self.bounds).draw(rng, x);
        }
        let r = rng.random::<f64>();
        let p = &self.peaks[self.cumulative.iter().position(|&c| r < c).unwrap_or(self.peaks.len() - 1)];
        let g: f64 = self.chi2.sample(rng);
        let z = DVector::from_fn(x.len(), |_, _| StandardNormal.sample(rng)) * (TAIL_DOF / g).sqrt();
        let step = &p.chol * z;
        for ((v, c), s) in x.iter_mut().zip(&p.center).zip(step.iter()) {
            *v = c + s;
        }
        x.iter().zip(self.bounds).all(|(v, &(lo, hi))| *v >= lo && *v <= hi)
    }

    fn density(&self, x: &[f64]) -> f64 {
        let power = -0.5 * (TAIL_DOF + self.bounds.len() as f64);
        let mut d = DEFENSIVE_WEIGHT;
        for (p, f) in self.peaks.iter().zip(&self.factors) {
            let diff = DVector::from_iterator(x.len(), x.iter().zip(&p.center).map(|(v, c)| v - c));
            let Some(w) = p.chol.solve_lower_triangular(&diff) else { continue };
            d += f * (1.0 + w.norm_squared() / TAIL_DOF).powf(power);
        }
        d
    }
}

fn same_peak(a: &[f64], b: &[f64], bounds: &[(f64, f64)]) -> bool {
    a.iter().zip(b).zip(bounds).all(|((a, b), &(lo, hi))| (a - b).abs() <= 1e-3 * (hi - lo))
}

/// Distance along axis `j` from `c` at which the surface first drops to
/// `target`, found by doubling; the wider of the two directions, capped at the
/// box width.
fn half_width<S: Surface + ?Sized>(acq: &S, c: &[f64], target: f64, j: usize, (lo, hi): (f64, f64)) -> f64 {
    let width = hi - lo;
    let mut widest: f64 = 0.0;
    let mut x = c.to_vec();
    for sign in [-1.0, 1.0] {
        let mut h = 1e-4 * width;
        while h < width {
            let v = c[j] + sign * h;
            if v < lo || v > hi {
                break;
            }
            x[j] = v;
            if acq.value(&x) <= target {
                break;
            }
            h *= 2.0;
        }
        widest = widest.max(h.min(width));
    }
    widest
}

struct Accepted {
    samples: Vec<Vec<f64>>,
    alpha_values: Vec<f64>,
    proposals: usize,
    /// Final ratio bound `M` with `alpha - alpha_min <= M q` on every proposal seen.
    scale: f64,
    complete: bool,
    /// Proposal that broke the bound, when the run stopped on it.
    breach: Option<Vec<f64>>,
}

/// Rejection sampling of `alpha - alpha_min` under `M q(x)`. `M` starts at
/// `scale`; a proposal that breaches it either stops the run
/// (`stop_on_breach`) or raises `M` and discards earlier acceptances. Stops
/// early when the budget is spent or hopeless.
#[allow(clippy::too_many_arguments)]
fn rejection<S: Surface + ?Sized, P: Proposal>(
    acq: &S,
    proposal: &P,
    dim: usize,
    n_s: usize,
    alpha_min: f64,
    mut scale: f64,
    budget: usize,
    stop_on_breach: bool,
    rng: &mut Rng,
) -> Accepted {
    let mut samples = Vec::with_capacity(n_s);
    let mut alpha_values = Vec::with_capacity(n_s);
    let mut proposals = 0;
    let mut x = vec![0.0; dim];
    let mut since_restart = 0usize;
    while samples.len() < n_s {
        if proposals >= budget || hopeless(samples.len(), since_restart, budget - proposals, n_s) {
            break;
        }
        proposals += 1;
        since_restart += 1;
        let inside = proposal.draw(rng, &mut x);
        let threshold_unit = 1.0 - rng.random::<f64>();
        if !inside {
            continue;
        }
        let cap = scale * proposal.density(&x);
        let threshold = cap * threshold_unit;
        let bound = acq.upper_bound(&x) - alpha_min;
        if threshold >= bound && bound <= cap {
            continue;
        }
        let a = acq.value(&x);
        if a - alpha_min > cap {
            if stop_on_breach {
                return Accepted {
                    samples: Vec::new(),
                    alpha_values: Vec::new(),
                    proposals,
                    scale,
                    complete: false,
                    breach: Some(x),
                };
            }
            scale = HEADROOM * (a - alpha_min) / proposal.density(&x);
            samples.clear();
            alpha_values.clear();
            since_restart = 0;
            continue;
        }
        if threshold < a - alpha_min {
            samples.push(x.clone());
            alpha_values.push(a);
        }
    }
    let complete = samples.len() == n_s;
    Accepted {
        samples,
        alpha_values,
        proposals,
        scale,
        complete,
        breach: None,
    }
}

fn continuous_sample<S: Surface + ?Sized>(acq: &S, bounds: &[(f64, f64)], n_s: usize, alpha_min: f64, rng: &mut Rng) -> Result<SliceSampleSet> {
    // pilot: uniform scan plus a few local ascents sets the envelope
    let pilot = optimize::uniform_points(PILOT_POINTS, bounds, rng);
    let pilot_values: Vec<f64> = pilot.iter().map(|p| acq.value(p)).collect();
    let mut order: Vec<usize> = (0..pilot.len()).collect();
    order.sort_by(|&a, &b| pilot_values[b].total_cmp(&pilot_values[a]).then(a.cmp(&b)));
    let mut peak = pilot_values[order[0]];
    let opts = AscentOptions {
        max_iters: 50,
        ..AscentOptions::default()
    };
    let mut peaks = Vec::with_capacity(PILOT_ASCENTS);
    for &i in order.iter().take(PILOT_ASCENTS) {
        let (x, v) = optimize::local_ascent(|x| acq.value(x), &pilot[i], bounds, opts);
        peak = peak.max(v);
        peaks.push((x, v - alpha_min));
    }
    if !(peak - alpha_min > FLAT_TOL) {
        return Err(Error::FlatSurface {
            requested: n_s,
            accepted: 0,
            proposals: 0,
        });
    }

    let budget = PROPOSALS_PER_SAMPLE.saturating_mul(n_s);
    let height = HEADROOM * (peak - alpha_min);
    let pilot_rate = pilot_values.iter().map(|v| (v - alpha_min).max(0.0)).sum::<f64>() / (PILOT_POINTS as f64 * height);
    let mut used = 0;
    if pilot_rate >= MIN_UNIFORM_RATE {
        let run = rejection(acq, &UniformBox(bounds), bounds.len(), n_s, alpha_min, height, budget, false, rng);
        used = run.proposals;
        if run.complete {
            return Ok(SliceSampleSet {
                samples: run.samples,
                alpha_min,
                alpha_values: run.alpha_values,
                n_requested: n_s,
                n_proposals_used: used,
                envelope: Some(alpha_min + run.scale),
                mixture_proposal: false,
                uniform_fallback: false,
            });
        }
    }

    // concentrated surface: propose around the peaks found so far. A breach
    // is climbed; a new peak joins the mixture, while a breach inside a known
    // peak's basin widens that peak's component. Either way sampling restarts.
    let mut fitted: Vec<Peak> = Vec::new();
    for (c, h) in peaks {
        if h > FLAT_TOL && !fitted.iter().any(|p| same_peak(&p.center, &c, bounds)) {
            fitted.push(Peak::fit(acq, c, h, alpha_min, bounds));
        }
    }
    if fitted.is_empty() {
        return Err(Error::FlatSurface {
            requested: n_s,
            accepted: 0,
            proposals: used,
        });
    }
    let mut breaches: Vec<Vec<f64>> = Vec::new();
    for restart in 0.. {
        let mixture = PeakMixture::new(bounds, &fitted);
        let scale = pilot
            .iter()
            .zip(&pilot_values)
            .map(|(p, v)| (p.as_slice(), *v - alpha_min))
            .chain(fitted.iter().map(|p| (p.center.as_slice(), p.height)))
            .chain(breaches.iter().map(|b| (b.as_slice(), acq.value(b) - alpha_min)))
            .map(|(p, h)| h / mixture.density(p))
            .fold(0.0, f64::max)
            * HEADROOM;
        let run = rejection(acq, &mixture, bounds.len(), n_s, alpha_min, scale, budget - used, restart < MAX_RESTARTS, rng);
        used += run.proposals;
        if let Some(b) = run.breach {
            let (x, v) = optimize::local_ascent(|x| acq.value(x), &b, bounds, opts);
            match fitted.iter().position(|p| same_peak(&p.center, &x, bounds)) {
                Some(k) => fitted[k].chol *= BREACH_WIDENING,
                None => fitted.push(Peak::fit(acq, x, v - alpha_min, alpha_min, bounds)),
            }
            breaches.push(b);
            continue;
        }
        if !run.complete {
            return Err(Error::FlatSurface {
                requested: n_s,
                accepted: run.samples.len(),
                proposals: used,
            });
        }
        return Ok(SliceSampleSet {
            samples: run.samples,
            alpha_min,
            alpha_values: run.alpha_values,
            n_requested: n_s,
            n_proposals_used: used,
            envelope: None,
            mixture_proposal: true,
            uniform_fallback: false,
        });
    }
    unreachable!("the restart loop only exits by returning")
}

/// [`bgss_sample`] that degrades to uniform domain samples on a flat surface.
pub fn bgss_or_uniform<S: Surface + ?Sized>(
    acq: &S,
    domain: &Domain,
    n_s: usize,
    alpha_min: f64,
    seed: u64,
) -> Result<SliceSampleSet> {
    match bgss_sample(acq, domain, n_s, alpha_min, seed) {
        Err(Error::FlatSurface { proposals, .. }) => {
            let samples = uniform_samples(domain, n_s, seed);
            let alpha_values = samples.iter().map(|s| acq.value(s)).collect();
            Ok(SliceSampleSet {
                samples,
                alpha_min,
                alpha_values,
                n_requested: n_s,
                n_proposals_used: proposals,
                envelope: None,
                mixture_proposal: false,
                uniform_fallback: true,
            })
        }
        other => other,
    }
}
